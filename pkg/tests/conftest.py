import itertools
from pathlib import Path

import pytest

import coopsim as cs

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"


def make_doc(n=1, k=1, T=10, alphabet=("a",), rates=((1.0,),), support="all", states=None):
    """Small config document builder; support='all' marks every triple supported."""
    if states is None:
        combos = [
            (f1, f2)
            for f1 in itertools.product(alphabet, repeat=n)
            for f2 in itertools.product(alphabet, repeat=n * k)
        ]
        p = 1.0 / len(combos)
        states = [{"f1": list(f1), "f2": list(f2), "p": p} for f1, f2 in combos]
    if support == "all":
        support = [
            {"m": m, "g1": list(g1), "g2": list(g2)}
            for m in range(len(rates))
            for g1 in itertools.product(alphabet, repeat=n)
            for g2 in itertools.product(alphabet, repeat=n * k)
        ]
    return {
        "shape": {"N": n, "K": k, "T": T},
        "fading": {"alphabet": list(alphabet), "states": states},
        "schemes": [{"id": i, "rates": list(r)} for i, r in enumerate(rates)],
        "support": support,
    }


@pytest.fixture(scope="session")
def toy_single():
    return cs.load_config(CONFIG_DIR / "toy_single.json")


@pytest.fixture(scope="session")
def toy_goodbad():
    return cs.load_config(CONFIG_DIR / "toy_goodbad.json")


@pytest.fixture(scope="session")
def desk():
    return cs.load_config(CONFIG_DIR / "desk.json")

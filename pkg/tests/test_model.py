import math

import numpy as np
import pytest

import coopsim as cs
from conftest import make_doc


def test_minimal_config_valid():
    cfg = cs.validate_config(make_doc())
    assert cfg.shape == cs.NetworkShape(1, 1, 10)
    assert cfg.schemes[0].rates == (1.0,)
    assert (0, ("a",), ("a",)) in cfg.support


@pytest.mark.parametrize(
    "mutate,code",
    [
        (lambda d: d["fading"]["states"][0].update(p=0.9), "distribution-not-normalized"),
        (lambda d: d["fading"]["states"][0].update(p=-0.5), "negative-probability"),
        (lambda d: d.update(schemes=[]), "empty-scheme-set"),
        (lambda d: d["schemes"][0].update(rates=[0.0]), "zero-rate-vector"),
        (lambda d: d["support"][0].update(m=5), "support-references-unknown-scheme"),
        (lambda d: d["support"][0].update(g1=["a", "a"]), "dimension-mismatch"),
        (lambda d: d["schemes"][0].update(rates=[1.0, 1.0]), "dimension-mismatch"),
        (lambda d: d.update(extra=1), "unknown-field"),
        (lambda d: d["shape"].update(T=0), "bad-shape"),
        (lambda d: d["schemes"][0].update(rates=[-1.0]), "negative-rate"),
    ],
)
def test_validation_errors(mutate, code):
    doc = make_doc()
    mutate(doc)
    with pytest.raises(cs.ConfigError) as exc:
        cs.validate_config(doc)
    assert exc.value.code == code


def test_zero_rate_vector_rejected_multidest():
    doc = make_doc(k=2, rates=((0.0, 0.0),))
    with pytest.raises(cs.ConfigError) as exc:
        cs.validate_config(doc)
    assert exc.value.code == "zero-rate-vector"


def test_duplicate_state_rejected():
    doc = make_doc()
    doc["fading"]["states"] = [
        {"f1": ["a"], "f2": ["a"], "p": 0.5},
        {"f1": ["a"], "f2": ["a"], "p": 0.5},
    ]
    with pytest.raises(cs.ConfigError) as exc:
        cs.validate_config(doc)
    assert exc.value.code == "duplicate-state"


def test_validate_is_idempotent():
    doc = make_doc(n=2, k=2, alphabet=("G", "B"), rates=((1.0, 0.5), (0.25, 2.0)))
    cfg = cs.validate_config(doc)
    again = cs.validate_config(cfg)
    assert again == cfg
    assert cs.validate_config(cfg.to_document()) == cfg


def test_sparse_table_zero_states_implicit():
    doc = make_doc(alphabet=("a", "b"))
    doc["fading"]["states"] = [{"f1": ["a"], "f2": ["a"], "p": 1.0}]
    cfg = cs.validate_config(doc)
    assert cfg.probability((("b",), ("b",))) == 0.0


# -- sampling ---------------------------------------------------------------


def test_sample_point_mass():
    doc = make_doc()
    cfg = cs.validate_config(doc)
    rng = np.random.default_rng(0)
    for _ in range(100):
        assert cs.sample_fading(cfg, rng) == (("a",), ("a",))


def test_sample_two_state_frequency():
    doc = make_doc(alphabet=("a", "b"))
    doc["fading"]["states"] = [
        {"f1": ["a"], "f2": ["a"], "p": 0.5},
        {"f1": ["b"], "f2": ["b"], "p": 0.5},
    ]
    cfg = cs.validate_config(doc)
    rng = np.random.default_rng(42)
    n = 100_000
    hits = sum(cs.sample_fading(cfg, rng) == (("a",), ("a",)) for _ in range(n))
    assert abs(hits / n - 0.5) <= 0.01


def test_sample_determinism():
    doc = make_doc(alphabet=("a", "b"))
    doc["fading"]["states"] = [
        {"f1": ["a"], "f2": ["a"], "p": 0.3},
        {"f1": ["b"], "f2": ["b"], "p": 0.7},
    ]
    cfg = cs.validate_config(doc)
    seq1 = [cs.sample_fading(cfg, np.random.default_rng(7)) for _ in range(1)]
    r1, r2 = np.random.default_rng(123), np.random.default_rng(123)
    a = [cs.sample_fading(cfg, r1) for _ in range(500)]
    b = [cs.sample_fading(cfg, r2) for _ in range(500)]
    assert a == b


def test_sample_empirical_convergence(desk):
    n = 100_000
    rng = np.random.default_rng(3)
    counts = {}
    for _ in range(n):
        f = cs.sample_fading(desk, rng)
        counts[f] = counts.get(f, 0) + 1
    bound = 5.0 * math.sqrt(math.log(n) / n)
    for f in desk.sorted_states:
        assert abs(counts.get(f, 0) / n - desk.probability(f)) <= bound


# -- queue counts -----------------------------------------------------------


def test_encoding_count_examples():
    cfg = cs.validate_config(
        make_doc(n=2, k=1, alphabet=("a", "b"), rates=((1.0,),) * 4, support=[])
    )
    assert cs.queue_count_encoding_based(cfg) == 16
    assert cs.queue_count_encoding_based(cs.validate_config(make_doc())) == 1
    cfg3 = cs.validate_config(make_doc(alphabet=("a", "b"), rates=((1.0,),) * 3, support=[]))
    assert cs.queue_count_encoding_based(cfg3) == 6


def test_encoding_count_matches_dense_state(desk):
    state = cs.QueueState.zeros(desk)
    assert state.relay[0].size == cs.queue_count_encoding_based(desk)


def test_encoding_count_independent_of_destinations():
    one = cs.validate_config(make_doc(n=2, k=1, alphabet=("a", "b"), rates=((1.0,),), support=[]))
    two = cs.validate_config(
        make_doc(n=2, k=3, alphabet=("a", "b"), rates=((1.0, 1.0, 1.0),), support=[])
    )
    assert cs.queue_count_encoding_based(one) == cs.queue_count_encoding_based(two)


@pytest.mark.parametrize(
    "args,expected",
    [((4, 3, 2, 2), 32768), ((1, 1, 1, 1), 1), ((2, 2, 2, 1), 64)],
)
def test_state_count_examples(args, expected):
    assert cs.queue_count_state_based(*args) == expected


def test_state_count_ratio_law():
    for levels, fsize, n in [(4, 2, 2), (3, 3, 1), (2, 4, 3)]:
        for k in range(1, 5):
            a = cs.queue_count_state_based(levels, k, fsize, n)
            b = cs.queue_count_state_based(levels, k + 1, fsize, n)
            assert b % a == 0
            assert b // a == levels * fsize ** (n + 1)


def test_state_count_overflow_detected():
    with pytest.raises(cs.CountOverflowError):
        cs.queue_count_state_based(10, 50, 2, 1)
    with pytest.raises(ValueError):
        cs.queue_count_state_based(0, 1, 1, 1)

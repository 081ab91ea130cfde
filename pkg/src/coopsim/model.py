"""Static description of a two-hop cooperative relay network.

A network has one source, ``N`` relays and ``K`` destinations.  Time is
slotted into blocks of ``T`` symbols.  In every block the channel draws a
combined fading state ``f = (f1, f2)`` from a finite joint table, where
``f1`` holds one label per relay (first hop, length N) and ``f2`` one label
per relay-destination pair (second hop, length N*K, relay-major order).
Labels are opaque strings; nothing in the simulator interprets them
numerically.

The source owns a finite menu of encoding schemes, each with a fixed
per-destination rate vector (bits per symbol).  Whether a packet encoded
with scheme ``m`` on first-hop state ``g1`` can be decoded by every
destination under second-hop state ``g2`` is given by an explicit support
relation over triples ``(m, g1, g2)``; deriving it from channel physics is
out of scope here.

Config files are single JSON documents::

    {
      "shape":   {"N": 2, "K": 2, "T": 10},
      "fading":  {"alphabet": ["G", "B"],
                  "states": [{"f1": ["G","G"], "f2": ["G","G","G","G"], "p": 0.25}, ...]},
      "schemes": [{"id": 0, "rates": [1.0, 0.5]}, ...],
      "support": [{"m": 0, "g1": ["G","G"], "g2": ["G","G","G","G"]}, ...]
    }

Unknown fields are rejected.  States missing from the table are treated as
probability zero.  Scheme ids must be the contiguous integers 0..M-1.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

PROB_TOL = 1e-12

# Counts are checked against a signed 128-bit ceiling so that blowups are
# reported instead of silently producing astronomically large integers.
INT128_MAX = 2**127 - 1

Label = str
HopState = tuple  # tuple of labels


class ConfigError(ValueError):
    """Invalid network description.  ``code`` is a stable machine tag."""

    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


class CountOverflowError(OverflowError):
    """A queue-count formula exceeded the 128-bit ceiling."""


@dataclass(frozen=True)
class NetworkShape:
    num_relays: int
    num_destinations: int
    block_length: int


@dataclass(frozen=True)
class FadingModel:
    """Joint block-fading table: (f1, f2) -> probability.

    The table is sparse; the key space is semantically the full product
    F^N x F^(N*K).  Keys are pairs of label tuples.
    """

    alphabet: tuple[Label, ...]
    table: dict


@dataclass(frozen=True)
class EncodingScheme:
    id: int
    rates: tuple[float, ...]  # bits/symbol per destination


@dataclass(frozen=True)
class SupportRelation:
    """Set of (m, g1, g2) triples a second-hop transmission may use."""

    triples: frozenset

    # lazily built lookup structures, keyed per second-hop state; these are
    # caches, not part of the relation's identity
    _by_g2: dict = field(default_factory=dict, compare=False, repr=False)
    _mask_cache: dict = field(default_factory=dict, compare=False, repr=False)

    def __contains__(self, triple) -> bool:
        return triple in self.triples

    def pairs_for(self, g2: HopState) -> list:
        """All (m, g1) drainable under second-hop state g2."""
        if not self._by_g2:
            grouped: dict = {}
            for m, g1, h2 in self.triples:
                grouped.setdefault(h2, []).append((m, g1))
            for v in grouped.values():
                v.sort()
            self._by_g2.update(grouped)
            self._by_g2.setdefault(None, [])
        return self._by_g2.get(g2, [])

    def mask(self, g2: HopState, config: "NetworkConfig") -> np.ndarray:
        """Boolean (M, |F|^N) feasibility mask for second-hop state g2."""
        key = (g2, config.fading.alphabet, len(config.schemes), config.shape.num_relays)
        cached = self._mask_cache.get(key)
        if cached is None:
            cached = np.zeros((len(config.schemes), len(config.first_hop_space)), dtype=bool)
            for m, g1 in self.pairs_for(g2):
                cached[m, config.g1_index[g1]] = True
            cached.setflags(write=False)
            self._mask_cache[key] = cached
        return cached


@dataclass(frozen=True)
class NetworkConfig:
    shape: NetworkShape
    fading: FadingModel
    schemes: tuple[EncodingScheme, ...]
    support: SupportRelation

    # -- derived, cached views used by the controller / region builders --

    @cached_property
    def first_hop_space(self) -> tuple:
        """All F^N tuples in lexicographic (alphabet-order) order."""
        return tuple(itertools.product(self.fading.alphabet, repeat=self.shape.num_relays))

    @cached_property
    def second_hop_space(self) -> tuple:
        """All F^(N*K) tuples, lexicographic.  Exponential; desk scale only."""
        n = self.shape.num_relays * self.shape.num_destinations
        return tuple(itertools.product(self.fading.alphabet, repeat=n))

    @cached_property
    def g1_index(self) -> dict:
        return {g1: i for i, g1 in enumerate(self.first_hop_space)}

    @cached_property
    def rates(self) -> np.ndarray:
        """(M, K) rate matrix, row m = scheme m."""
        out = np.array([s.rates for s in self.schemes], dtype=float)
        out.setflags(write=False)
        return out

    @cached_property
    def rate_sums(self) -> np.ndarray:
        """(M,) vector of r_m . 1, summed k ascending."""
        out = self.rates.sum(axis=1)
        out.setflags(write=False)
        return out

    @cached_property
    def sorted_states(self) -> tuple:
        """Fading-table states in canonical (lexicographic) order."""
        idx = {lab: i for i, lab in enumerate(self.fading.alphabet)}

        def key(st):
            f1, f2 = st
            return tuple(idx[x] for x in f1) + tuple(idx[x] for x in f2)

        return tuple(sorted(self.fading.table, key=key))

    @cached_property
    def cumulative_probs(self) -> np.ndarray:
        out = np.cumsum([self.fading.table[s] for s in self.sorted_states])
        out.setflags(write=False)
        return out

    def probability(self, f) -> float:
        return self.fading.table.get(f, 0.0)

    def to_document(self) -> dict:
        """Round-trip back to the JSON document form (canonically ordered)."""
        sh = self.shape
        return {
            "shape": {"N": sh.num_relays, "K": sh.num_destinations, "T": sh.block_length},
            "fading": {
                "alphabet": list(self.fading.alphabet),
                "states": [
                    {"f1": list(f1), "f2": list(f2), "p": self.fading.table[(f1, f2)]}
                    for f1, f2 in self.sorted_states
                ],
            },
            "schemes": [{"id": s.id, "rates": list(s.rates)} for s in self.schemes],
            "support": [
                {"m": m, "g1": list(g1), "g2": list(g2)}
                for m, g1, g2 in sorted(self.support.triples)
            ],
        }


# ---------------------------------------------------------------------------
# validation


def _require_keys(obj: dict, allowed: set, where: str) -> None:
    unknown = set(obj) - allowed
    if unknown:
        raise ConfigError("unknown-field", f"unknown field(s) {sorted(unknown)} in {where}")


def _label_tuple(raw, arity: int, alphabet: set, what: str) -> HopState:
    if not isinstance(raw, (list, tuple)) or len(raw) != arity:
        raise ConfigError("dimension-mismatch", f"{what} must have {arity} label(s), got {raw!r}")
    for lab in raw:
        if lab not in alphabet:
            raise ConfigError("dimension-mismatch", f"{what} uses label {lab!r} not in alphabet")
    return tuple(raw)


def validate_config(raw) -> NetworkConfig:
    """Validate a parsed config document (or re-validate a NetworkConfig)."""
    if isinstance(raw, NetworkConfig):
        raw = raw.to_document()
    if not isinstance(raw, dict):
        raise ConfigError("bad-document", "config document must be a JSON object")
    _require_keys(raw, {"shape", "fading", "schemes", "support"}, "config")
    for key in ("shape", "fading", "schemes", "support"):
        if key not in raw:
            raise ConfigError("missing-field", f"config is missing {key!r}")

    sh = raw["shape"]
    _require_keys(sh, {"N", "K", "T"}, "shape")
    try:
        n, k, t = int(sh["N"]), int(sh["K"]), int(sh["T"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError("bad-shape", f"shape requires integer N, K, T: {exc}") from None
    if n < 1 or k < 1 or t < 1:
        raise ConfigError("bad-shape", "N, K and T must all be >= 1")
    shape = NetworkShape(n, k, t)

    fad = raw["fading"]
    _require_keys(fad, {"alphabet", "states"}, "fading")
    alphabet = tuple(fad.get("alphabet", ()))
    if not alphabet or len(set(alphabet)) != len(alphabet):
        raise ConfigError("bad-alphabet", "alphabet must be a non-empty list of distinct labels")
    alpha_set = set(alphabet)
    table: dict = {}
    total = 0.0
    for ent in fad.get("states", ()):
        _require_keys(ent, {"f1", "f2", "p"}, "fading state")
        f1 = _label_tuple(ent.get("f1"), n, alpha_set, "f1")
        f2 = _label_tuple(ent.get("f2"), n * k, alpha_set, "f2")
        p = float(ent.get("p", 0.0))
        if p < 0.0:
            raise ConfigError("negative-probability", f"state {(f1, f2)} has probability {p}")
        if (f1, f2) in table:
            raise ConfigError("duplicate-state", f"state {(f1, f2)} listed twice")
        table[(f1, f2)] = p
        total += p
    if abs(total - 1.0) > PROB_TOL:
        raise ConfigError(
            "distribution-not-normalized", f"state probabilities sum to {total!r}, expected 1"
        )
    fading = FadingModel(alphabet=alphabet, table=table)

    raw_schemes = raw["schemes"]
    if not raw_schemes:
        raise ConfigError("empty-scheme-set", "at least one encoding scheme is required")
    schemes = []
    for pos, ent in enumerate(raw_schemes):
        _require_keys(ent, {"id", "rates"}, "scheme")
        if int(ent.get("id", -1)) != pos:
            raise ConfigError("bad-scheme-id", "scheme ids must be contiguous 0..M-1 in order")
        rates = tuple(float(x) for x in ent.get("rates", ()))
        if len(rates) != k:
            raise ConfigError("dimension-mismatch", f"scheme {pos} needs {k} rates, got {len(rates)}")
        if any(r < 0 for r in rates):
            raise ConfigError("negative-rate", f"scheme {pos} has a negative rate")
        if all(r == 0 for r in rates):
            raise ConfigError("zero-rate-vector", f"scheme {pos} has an all-zero rate vector")
        schemes.append(EncodingScheme(id=pos, rates=rates))

    triples = set()
    for ent in raw["support"]:
        _require_keys(ent, {"m", "g1", "g2"}, "support entry")
        m = int(ent.get("m", -1))
        if not 0 <= m < len(schemes):
            raise ConfigError("support-references-unknown-scheme", f"support references scheme {m}")
        g1 = _label_tuple(ent.get("g1"), n, alpha_set, "support g1")
        g2 = _label_tuple(ent.get("g2"), n * k, alpha_set, "support g2")
        triples.add((m, g1, g2))

    return NetworkConfig(
        shape=shape,
        fading=fading,
        schemes=tuple(schemes),
        support=SupportRelation(triples=frozenset(triples)),
    )


def load_config(path) -> NetworkConfig:
    with open(Path(path), "r", encoding="utf-8") as fh:
        return validate_config(json.load(fh))


# ---------------------------------------------------------------------------
# sampling and counting


def sample_fading(config: NetworkConfig, rng: np.random.Generator):
    """Draw one combined state (f1, f2) from the joint table.

    The draw consumes exactly one uniform variate, so a seeded generator
    reproduces the same state sequence on every run.
    """
    u = rng.random()
    i = int(np.searchsorted(config.cumulative_probs, u, side="right"))
    if i >= len(config.sorted_states):
        i = len(config.sorted_states) - 1
    return config.sorted_states[i]


def queue_count_encoding_based(config: NetworkConfig) -> int:
    """Virtual queues per relay under the encoding-based architecture: |M| * |F|^N."""
    return len(config.schemes) * len(config.fading.alphabet) ** config.shape.num_relays


def queue_count_state_based(
    levels: int, num_destinations: int, alphabet_size: int, num_relays: int
) -> int:
    """Virtual queues per relay if rates are quantized to ``levels`` values per
    destination and a queue is kept per state: L^K * |F|^(K*(N+1)).

    Raises CountOverflowError above the signed 128-bit ceiling.
    """
    if min(levels, num_destinations, alphabet_size, num_relays) < 1:
        raise ValueError("all queue-count arguments must be >= 1")
    count = levels**num_destinations * alphabet_size ** (
        num_destinations * (num_relays + 1)
    )
    if count > INT128_MAX:
        raise CountOverflowError(
            f"state-based queue count exceeds 128-bit range ({count.bit_length()} bits)"
        )
    return count

"""Queue state and the exact per-block update dynamics.

The source keeps one queue of bits per destination.  Every relay keeps one
virtual queue of buffered symbols per (encoding scheme, first-hop fading
state) pair, zero-initialized and dense: ``relay[n, m, i]`` where ``i``
indexes F^N lexicographically.

A first-hop block with scheme m under first-hop state g1 updates

    Qs_k   <- (Qs_k + A_k - r_m^k * T)+        for every destination k
    Q_n    <- Q_n + T  at key (m, g1)          for every relay n

and a second-hop block draining (m, g1) updates

    Qs_k   <- Qs_k + A_k
    Q_n    <- (Q_n - T)+  at key (m, g1)       for every relay n.

The first hop always loads T symbols per relay even if the source queue
held fewer than r_m^k * T bits (the missing bits are padding); the clamp on
Qs models exactly that.  Operations are pure: they return a new state and
never mutate their input.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import NetworkConfig


@dataclass
class QueueState:
    config: NetworkConfig
    source: np.ndarray  # (K,) bits
    relay: np.ndarray  # (N, M, |F|^N) symbols

    @classmethod
    def zeros(cls, config: NetworkConfig) -> "QueueState":
        sh = config.shape
        n_g1 = len(config.first_hop_space)
        return cls(
            config=config,
            source=np.zeros(sh.num_destinations),
            relay=np.zeros((sh.num_relays, len(config.schemes), n_g1)),
        )

    @classmethod
    def from_values(cls, config: NetworkConfig, source, relay) -> "QueueState":
        state = cls.zeros(config)
        src = np.asarray(source, dtype=float)
        rel = np.asarray(relay, dtype=float)
        if src.shape != state.source.shape or rel.shape != state.relay.shape:
            raise ValueError(
                f"expected shapes {state.source.shape} and {state.relay.shape}, "
                f"got {src.shape} and {rel.shape}"
            )
        state.source = src.copy()
        state.relay = rel.copy()
        return state

    def copy(self) -> "QueueState":
        return QueueState(self.config, self.source.copy(), self.relay.copy())

    def relay_column_sums(self) -> np.ndarray:
        """(M, |F|^N) totals over relays, n ascending."""
        return self.relay.sum(axis=0)

    def is_relay_symmetric(self) -> bool:
        return bool(np.all(self.relay == self.relay[0]))

    def total_source_bits(self) -> float:
        return float(self.source.sum())

    def total_relay_symbols(self) -> float:
        return float(self.relay.sum())


def _check_event(state: QueueState, arrivals, m: int, g1) -> tuple[np.ndarray, int]:
    arr = np.asarray(arrivals, dtype=float)
    if arr.shape != state.source.shape:
        raise ValueError(f"arrivals must have shape {state.source.shape}, got {arr.shape}")
    if not 0 <= m < len(state.config.schemes):
        raise ValueError(f"unknown scheme id {m}")
    g1i = state.config.g1_index.get(tuple(g1))
    if g1i is None:
        raise ValueError(f"unknown first-hop state {g1!r}")
    return arr, g1i


def apply_first_hop(state: QueueState, arrivals, m: int, g1, T: float | None = None) -> QueueState:
    """Source transmits one block with scheme m under first-hop state g1."""
    arr, g1i = _check_event(state, arrivals, m, g1)
    if T is None:
        T = state.config.shape.block_length
    rates = state.config.rates[m]
    source = np.maximum(state.source + arr - rates * T, 0.0)
    relay = state.relay.copy()
    relay[:, m, g1i] += T
    return QueueState(state.config, source, relay)


def apply_second_hop(state: QueueState, arrivals, m: int, g1, T: float | None = None) -> QueueState:
    """Relays drain virtual queue (m, g1); the caller must have checked
    that (m, g1, f2) is supported for the block's second-hop state f2."""
    arr, g1i = _check_event(state, arrivals, m, g1)
    if T is None:
        T = state.config.shape.block_length
    source = state.source + arr
    relay = state.relay.copy()
    relay[:, m, g1i] = np.maximum(relay[:, m, g1i] - T, 0.0)
    return QueueState(state.config, source, relay)


def apply_idle(state: QueueState, arrivals) -> QueueState:
    """No transmission; arrivals still accumulate."""
    arr = np.asarray(arrivals, dtype=float)
    if arr.shape != state.source.shape:
        raise ValueError(f"arrivals must have shape {state.source.shape}, got {arr.shape}")
    return QueueState(state.config, state.source + arr, state.relay.copy())


# ---------------------------------------------------------------------------
# snapshot serialization: block, Qs_1..Qs_K, then relay queues in
# (n, m, g1) lexicographic order


def snapshot_header(config: NetworkConfig) -> list[str]:
    cols = ["block"]
    cols += [f"Qs_{k + 1}" for k in range(config.shape.num_destinations)]
    for n in range(config.shape.num_relays):
        for m in range(len(config.schemes)):
            for g1 in config.first_hop_space:
                cols.append(f"Q_n{n}_m{m}_{'|'.join(g1)}")
    return cols


def snapshot_row(state: QueueState, block: int) -> list:
    vals: list = [block]
    vals += [float(x) for x in state.source]
    vals += [float(x) for x in state.relay.reshape(-1)]
    return vals

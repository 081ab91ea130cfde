"""Block-by-block simulation, arrivals, stability verdicts, drift probes.

A run draws the fading state and the exogenous arrivals for each block,
asks the controller for a decision, applies the matching queue update and
records time series.  Everything is a pure function of the seed: the seed
is split with numpy's SeedSequence into one PCG64 substream for fading and
one per destination for arrivals, so runs are reproducible bit for bit and
independent runs can execute in parallel.

Arrival models (mean exactly rate_k * T bits per block, bounded support):

  constant         exactly rate_k * T every block
  uniform-integer  U + B with U uniform on {0..2*floor(mu)} and B a
                   Bernoulli(mu - floor(mu)) top-up, mu = rate_k * T; this
                   is plain uniform {0..2*mu} whenever mu is an integer
  bernoulli-batch  batch_k bits with probability mu / batch_k, else 0

The stability verdict fits a least-squares slope to the total backlog, in
bits, over the trailing half of the horizon.  Relay symbols convert to
bits with each queue's own rate sum r_m . 1 by default (the same weighting
the quadratic potential uses); a max-rate conversion is available.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .controller import FIRST_HOP, IDLE, SECOND_HOP, decide, lyapunov
from .model import NetworkConfig, sample_fading
from .queueing import QueueState, apply_first_hop, apply_idle, apply_second_hop, snapshot_header, snapshot_row

DISTRIBUTIONS = ("constant", "uniform-integer", "bernoulli-batch")
VARIANT_NAMES = (FIRST_HOP, SECOND_HOP, IDLE)
VARIANT_CODES = {name: i for i, name in enumerate(VARIANT_NAMES)}

METRICS_COLUMNS = (
    "block",
    "variant",
    "m",
    "g1",
    "A",
    "B",
    "source_backlog",
    "relay_backlog",
    "relay_backlog_bits",
    "lyapunov",
)


@dataclass(frozen=True)
class ArrivalConfig:
    rates: tuple  # bits/symbol per destination
    distribution: str = "uniform-integer"
    batch: tuple | None = None  # bernoulli-batch sizes; default 2 * rate_k * T

    def __post_init__(self):
        object.__setattr__(self, "rates", tuple(float(r) for r in self.rates))
        if any(r < 0 for r in self.rates):
            raise ValueError("arrival rates must be non-negative")
        if self.distribution not in DISTRIBUTIONS:
            raise ValueError(f"unknown arrival distribution {self.distribution!r}")
        if self.batch is not None:
            object.__setattr__(self, "batch", tuple(float(b) for b in self.batch))
            if len(self.batch) != len(self.rates):
                raise ValueError("batch needs one entry per destination")
            if any(b <= 0 for b in self.batch):
                raise ValueError("batch sizes must be positive")


def _draw_destination(cfg: ArrivalConfig, k: int, rng: np.random.Generator, T: float, size=None):
    """Arrivals for destination k; scalar when size is None, else (size,)."""
    mu = cfg.rates[k] * T
    if cfg.distribution == "constant":
        return mu if size is None else np.full(size, mu)
    if cfg.distribution == "uniform-integer":
        base = math.floor(mu)
        frac = mu - base
        u = rng.integers(0, 2 * base + 1, size=size)
        b = rng.random(size) < frac
        if size is None:
            return float(u) + float(b)
        return u.astype(float) + b
    # bernoulli-batch
    if mu == 0.0:
        return 0.0 if size is None else np.zeros(size)
    batch = cfg.batch[k] if cfg.batch is not None else 2.0 * mu
    p = mu / batch
    if p > 1.0:
        raise ValueError(f"batch size {batch} below mean {mu} for destination {k}")
    hit = rng.random(size) < p
    if size is None:
        return batch * float(hit)
    return batch * hit


def generate_arrivals(cfg: ArrivalConfig, rng: np.random.Generator, T: float) -> np.ndarray:
    """One block of arrivals, destinations drawn in ascending order."""
    return np.array([_draw_destination(cfg, k, rng, T) for k in range(len(cfg.rates))])


# ---------------------------------------------------------------------------
# metrics


@dataclass
class Metrics:
    horizon: int
    block_length: int
    source_backlog: np.ndarray  # bits after each block's update
    relay_backlog: np.ndarray = None  # symbols
    relay_backlog_bits: np.ndarray = None  # symbols weighted by each queue's r_m . 1
    lyapunov: np.ndarray = None
    variants: np.ndarray = None  # codes into VARIANT_NAMES
    decision_m: np.ndarray = None  # -1 when the action has no scheme
    decision_g1: np.ndarray = None  # index into g1_space, -1 when absent
    weight_first: np.ndarray = None
    weight_second: np.ndarray = None
    fading_state_idx: np.ndarray = None  # index into the config's sorted states
    g1_space: tuple = ()
    max_scheme_rate: float = 0.0
    seed: int | None = None
    delivered_bits: np.ndarray = None  # per destination, capped at offered
    offered_bits: np.ndarray = None
    fraction_first: float = 0.0
    fraction_second: float = 0.0
    fraction_idle: float = 0.0
    trailing_avg_source_bits: float = 0.0
    trailing_avg_relay_symbols: float = 0.0
    trailing_avg_total_bits: float = 0.0
    final_state: QueueState | None = None

    def __post_init__(self):
        if self.relay_backlog is None:
            self.relay_backlog = np.zeros(self.horizon)
        if self.relay_backlog_bits is None:
            self.relay_backlog_bits = np.zeros(self.horizon)

    def total_backlog_bits(self, relay_conversion: str = "rate-sum") -> np.ndarray:
        if relay_conversion == "rate-sum":
            return self.source_backlog + self.relay_backlog_bits
        if relay_conversion == "max-rate":
            return self.source_backlog + self.relay_backlog * self.max_scheme_rate
        raise ValueError(f"unknown relay conversion {relay_conversion!r}")


@dataclass(frozen=True)
class StabilityVerdict:
    verdict: str  # "stable" | "unstable" | "inconclusive"
    growth_rate: float  # bits/block over the trailing half
    theta_stable: float
    theta_unstable: float


@dataclass(frozen=True)
class DriftEstimate:
    mean: float
    stderr: float
    samples: int


def _ls_slope(t: np.ndarray, x: np.ndarray) -> float:
    t = t.astype(float)
    d = t - t.mean()
    den = float((d * d).sum())
    if den == 0.0:
        return float("nan")
    return float((d * (x - x.mean())).sum() / den)


def stability_verdict(
    metrics: Metrics,
    theta_stable: float | None = None,
    theta_unstable: float | None = None,
    relay_conversion: str = "rate-sum",
) -> StabilityVerdict:
    """Classify the trailing-half backlog slope against two thresholds.

    Defaults: theta_stable = 0.01 * T and theta_unstable = 0.1 * T bits per
    block, an order of magnitude apart so slow transients do not flip the
    verdict.  Slopes between the thresholds are inconclusive.
    """
    if theta_stable is None:
        theta_stable = 0.01 * metrics.block_length
    if theta_unstable is None:
        theta_unstable = 0.1 * metrics.block_length
    if not theta_stable < theta_unstable:
        raise ValueError("theta_stable must be below theta_unstable")
    series = metrics.total_backlog_bits(relay_conversion)
    start = metrics.horizon // 2
    tail = series[start:]
    if len(tail) < 2:
        slope = float("nan")
    else:
        slope = _ls_slope(np.arange(start, metrics.horizon), tail)
    if slope < theta_stable:
        verdict = "stable"
    elif slope > theta_unstable:
        verdict = "unstable"
    else:
        verdict = "inconclusive"  # includes nan slopes
    return StabilityVerdict(verdict, slope, theta_stable, theta_unstable)


# ---------------------------------------------------------------------------
# the block loop


def run(
    config: NetworkConfig,
    arrivals: ArrivalConfig,
    horizon: int,
    seed: int,
    allow_idle: bool = False,
    snapshot_sink=None,
) -> Metrics:
    """Simulate ``horizon`` blocks from empty queues.

    ``snapshot_sink``, when given, receives the full queue snapshot CSV
    (header plus one row per block) as it is produced.
    """
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    k_dest = config.shape.num_destinations
    if len(arrivals.rates) != k_dest:
        raise ValueError(f"arrival rates must have {k_dest} entries")
    T = config.shape.block_length

    seq = np.random.SeedSequence(seed)
    children = seq.spawn(1 + k_dest)
    rng_fade = np.random.default_rng(children[0])
    u = rng_fade.random(horizon)
    state_idx = np.searchsorted(config.cumulative_probs, u, side="right")
    np.minimum(state_idx, len(config.sorted_states) - 1, out=state_idx)
    arr = np.empty((k_dest, horizon))
    for k in range(k_dest):
        arr[k] = _draw_destination(arrivals, k, np.random.default_rng(children[1 + k]), T, horizon)

    states = config.sorted_states
    g1_index = config.g1_index
    rate_sums = config.rate_sums

    src_series = np.empty(horizon)
    rel_series = np.empty(horizon)
    rel_bits_series = np.empty(horizon)
    v_series = np.empty(horizon)
    variants = np.empty(horizon, dtype=np.int8)
    dec_m = np.full(horizon, -1, dtype=np.int32)
    dec_g1 = np.full(horizon, -1, dtype=np.int32)
    w_first = np.empty(horizon)
    w_second = np.empty(horizon)
    delivered = np.zeros(k_dest)

    state = QueueState.zeros(config)
    if snapshot_sink is not None:
        snapshot_sink.write(",".join(snapshot_header(config)) + "\n")

    for t in range(horizon):
        f = states[state_idx[t]]
        a = arr[:, t]
        d = decide(state, f, config.support, allow_idle=allow_idle)
        if d.variant == FIRST_HOP:
            state = apply_first_hop(state, a, d.m, f[0])
            dec_m[t] = d.m
        elif d.variant == SECOND_HOP:
            assert (d.m, d.g1, f[1]) in config.support
            pre = state.relay[0, d.m, g1_index[d.g1]]
            delivered += min(T, pre) * config.rates[d.m]
            state = apply_second_hop(state, a, d.m, d.g1)
            dec_m[t] = d.m
            dec_g1[t] = g1_index[d.g1]
        else:
            state = apply_idle(state, a)
        variants[t] = VARIANT_CODES[d.variant]
        w_first[t] = d.weight_first
        w_second[t] = d.weight_second
        src_series[t] = state.source.sum()
        rel_series[t] = state.relay.sum()
        rel_bits_series[t] = (state.relay * rate_sums[None, :, None]).sum()
        v_series[t] = lyapunov(state)
        if snapshot_sink is not None:
            snapshot_sink.write(
                ",".join(str(v) if isinstance(v, int) else repr(v) for v in snapshot_row(state, t))
                + "\n"
            )

    offered = arr.sum(axis=1)
    start = horizon // 2
    counts = np.bincount(variants, minlength=3)
    return Metrics(
        horizon=horizon,
        block_length=T,
        source_backlog=src_series,
        relay_backlog=rel_series,
        relay_backlog_bits=rel_bits_series,
        lyapunov=v_series,
        variants=variants,
        decision_m=dec_m,
        decision_g1=dec_g1,
        weight_first=w_first,
        weight_second=w_second,
        fading_state_idx=state_idx,
        g1_space=config.first_hop_space,
        max_scheme_rate=float(config.rates.max()),
        seed=seed,
        delivered_bits=np.minimum(delivered, offered),
        offered_bits=offered,
        fraction_first=counts[0] / horizon,
        fraction_second=counts[1] / horizon,
        fraction_idle=counts[2] / horizon,
        trailing_avg_source_bits=float(src_series[start:].mean()),
        trailing_avg_relay_symbols=float(rel_series[start:].mean()),
        trailing_avg_total_bits=float(
            (src_series[start:] + rel_bits_series[start:]).mean()
        ),
        final_state=state,
    )


def drift_check(
    config: NetworkConfig,
    arrivals: ArrivalConfig,
    probe_state: QueueState,
    samples: int,
    seed: int = 0,
    allow_idle: bool = False,
) -> DriftEstimate:
    """Monte Carlo estimate of the one-block potential drift at a fixed state.

    Each sample independently draws (fading, arrivals), applies the
    controller's action to the probe state, and measures V(next) - V(probe).
    """
    if samples < 2:
        raise ValueError("need at least 2 samples")
    T = config.shape.block_length
    seq = np.random.SeedSequence(seed)
    ch_fade, ch_arr = seq.spawn(2)
    rng_fade = np.random.default_rng(ch_fade)
    rng_arr = np.random.default_rng(ch_arr)
    v0 = lyapunov(probe_state)
    dv = np.empty(samples)
    for i in range(samples):
        f = sample_fading(config, rng_fade)
        a = generate_arrivals(arrivals, rng_arr, T)
        d = decide(probe_state, f, config.support, allow_idle=allow_idle)
        if d.variant == FIRST_HOP:
            nxt = apply_first_hop(probe_state, a, d.m, f[0])
        elif d.variant == SECOND_HOP:
            nxt = apply_second_hop(probe_state, a, d.m, d.g1)
        else:
            nxt = apply_idle(probe_state, a)
        dv[i] = lyapunov(nxt) - v0
    mean = float(dv.mean())
    stderr = float(dv.std(ddof=1) / math.sqrt(samples))
    return DriftEstimate(mean=mean, stderr=stderr, samples=samples)


# ---------------------------------------------------------------------------
# serialization


def write_metrics_csv(metrics: Metrics, fh) -> None:
    """Frozen column order; floats use shortest round-trip formatting."""
    fh.write(",".join(METRICS_COLUMNS) + "\n")
    for t in range(metrics.horizon):
        m = metrics.decision_m[t]
        g1 = metrics.decision_g1[t]
        row = (
            str(t),
            VARIANT_NAMES[metrics.variants[t]],
            "" if m < 0 else str(int(m)),
            "" if g1 < 0 else "|".join(metrics.g1_space[g1]),
            repr(float(metrics.weight_first[t])),
            repr(float(metrics.weight_second[t])),
            repr(float(metrics.source_backlog[t])),
            repr(float(metrics.relay_backlog[t])),
            repr(float(metrics.relay_backlog_bits[t])),
            repr(float(metrics.lyapunov[t])),
        )
        fh.write(",".join(row) + "\n")


def summary_dict(metrics: Metrics, verdict: StabilityVerdict) -> dict:
    return {
        "horizon": metrics.horizon,
        "seed": metrics.seed,
        "block_length": metrics.block_length,
        "delivered_bits": [float(x) for x in metrics.delivered_bits],
        "offered_bits": [float(x) for x in metrics.offered_bits],
        "fraction_first_hop": metrics.fraction_first,
        "fraction_second_hop": metrics.fraction_second,
        "fraction_idle": metrics.fraction_idle,
        "trailing_avg_source_bits": metrics.trailing_avg_source_bits,
        "trailing_avg_relay_symbols": metrics.trailing_avg_relay_symbols,
        "trailing_avg_total_bits": metrics.trailing_avg_total_bits,
        "final_total_bits": float(metrics.total_backlog_bits()[-1]),
        "verdict": verdict.verdict,
        "growth_rate": verdict.growth_rate,
        "theta_stable": verdict.theta_stable,
        "theta_unstable": verdict.theta_unstable,
    }

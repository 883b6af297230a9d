"""Replicated runs, exceedance estimates and binomial confidence intervals.

Replication ``i`` always uses the streams derived from ``(seed, i)``, and
chunk results are concatenated by index, so the output is identical for any
number of worker processes.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from ..errors import UnstableQueueError
from .runs import DEFAULT_EVENT_CAP, QueueParams, Streams, run_busy_cycle, run_horizon

Z95 = 1.959963984540054


@dataclass(frozen=True)
class EstimateRow:
    n: int
    r_hat: float
    ci_low: float
    ci_high: float
    cycles: int


def wilson_interval(successes: int, trials: int, z: float = Z95) -> tuple[float, float]:
    if trials <= 0:
        raise ValueError("need at least one trial")
    p = successes / trials
    denom = 1.0 + z * z / trials
    centre = (p + z * z / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / denom
    # the endpoints are exact at the boundary counts
    lo = 0.0 if successes == 0 else max(0.0, centre - half)
    hi = 1.0 if successes == trials else min(1.0, centre + half)
    return lo, hi


def binomial_se(p: float, trials: int) -> float:
    """Standard error of a proportion at reference value ``p`` (the score-test SE)."""
    return math.sqrt(p * (1.0 - p) / trials)


@dataclass(frozen=True)
class CycleBatch:
    max_len: np.ndarray
    cycle_len: np.ndarray
    busy_len: np.ndarray
    k_subbusy: np.ndarray | None
    first_service: np.ndarray | None
    sub_maxima: tuple | None


@dataclass(frozen=True)
class HorizonBatch:
    max_len: np.ndarray
    first_passage: np.ndarray  # nan where the level was never exceeded
    arrivals: np.ndarray


def _chunks(total: int, workers: int) -> list[tuple[int, int]]:
    pieces = max(1, min(total, 4 * workers))
    edges = np.linspace(0, total, pieces + 1).astype(int)
    return [(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:]) if b > a]


def _map_chunks(func, args, total: int, workers: int):
    spans = _chunks(total, workers)
    if workers <= 1 or len(spans) == 1:
        return [func(*args, lo, hi) for lo, hi in spans]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(func, *args, lo, hi) for lo, hi in spans]
        return [f.result() for f in futures]


def _cycle_chunk(params, seed, first_service, event_cap, keep_sub, lo, hi):
    rows = []
    for i in range(lo, hi):
        rec = run_busy_cycle(params, Streams.for_replication(params, seed, i), first_service, event_cap)
        rows.append(
            (rec.max_len, rec.cycle_len, rec.busy_len, rec.k_subbusy, rec.first_service,
             rec.sub_maxima if keep_sub else None)
        )
    return rows


def default_workers() -> int:
    return os.cpu_count() or 1


def simulate_cycles(
    params: QueueParams,
    cycles: int,
    seed: int,
    workers: int = 1,
    first_service: float | None = None,
    allow_unstable: bool = False,
    event_cap: int = DEFAULT_EVENT_CAP,
    keep_sub_maxima: bool = False,
) -> CycleBatch:
    """Run ``cycles`` independent busy cycles (replication ``i`` seeded by ``(seed, i)``)."""
    if cycles < 1:
        raise ValueError("cycles must be >= 1")
    if params.rho >= 1.0 and not allow_unstable:
        raise UnstableQueueError(f"load {params.rho:.4g} >= 1; pass allow_unstable=True to simulate anyway")
    parts = _map_chunks(
        _cycle_chunk, (params, seed, first_service, event_cap, keep_sub_maxima), cycles, workers
    )
    rows = [r for part in parts for r in part]
    star = params.discipline == "fbstar"
    cols = list(zip(*rows))
    return CycleBatch(
        max_len=np.asarray(cols[0], dtype=np.int64),
        cycle_len=np.asarray(cols[1], dtype=float),
        busy_len=np.asarray(cols[2], dtype=float),
        k_subbusy=np.asarray(cols[3], dtype=np.int64) if star else None,
        first_service=np.asarray(cols[4], dtype=float) if star else None,
        sub_maxima=tuple(cols[5]) if keep_sub_maxima else None,
    )


def exceedance_rows(max_len: np.ndarray, n_max: int) -> list[EstimateRow]:
    """Empirical ``P(M > n)`` with 95% Wilson intervals for n = 0..n_max."""
    total = int(max_len.size)
    counts = np.bincount(np.minimum(max_len, n_max + 1), minlength=n_max + 2)
    # number of cycles with max > n
    above = total - np.cumsum(counts)[: n_max + 1]
    rows = []
    for n in range(n_max + 1):
        k = int(above[n])
        lo, hi = wilson_interval(k, total)
        rows.append(EstimateRow(n=n, r_hat=k / total, ci_low=lo, ci_high=hi, cycles=total))
    return rows


def estimate_exceedance(
    params: QueueParams,
    n_max: int,
    cycles: int,
    seed: int,
    workers: int = 1,
    allow_unstable: bool = False,
    event_cap: int = DEFAULT_EVENT_CAP,
) -> list[EstimateRow]:
    batch = simulate_cycles(params, cycles, seed, workers, allow_unstable=allow_unstable, event_cap=event_cap)
    return exceedance_rows(batch.max_len, n_max)


def simulate_horizons(
    params: QueueParams,
    t_end: float,
    d: int,
    replications: int,
    seed: int,
    workers: int = 1,
    event_cap: int = DEFAULT_EVENT_CAP,
) -> HorizonBatch:
    """Independent runs over ``[0, t_end]`` from an empty system."""
    if replications < 1:
        raise ValueError("replications must be >= 1")
    parts = _map_chunks(_horizon_chunk, (params, t_end, d, seed, event_cap), replications, workers)
    results = [r for part in parts for r in part]
    return HorizonBatch(
        max_len=np.asarray([r.max_len for r in results], dtype=np.int64),
        first_passage=np.asarray(
            [math.nan if r.first_passage is None else r.first_passage for r in results], dtype=float
        ),
        arrivals=np.asarray([r.arrivals for r in results], dtype=np.int64),
    )


def _horizon_chunk(params, t_end, d, seed, event_cap, lo, hi):
    return [
        run_horizon(params, t_end, d, Streams.for_replication(params, seed, i), event_cap)
        for i in range(lo, hi)
    ]

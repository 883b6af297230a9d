"""Two FB queues driven by common arrivals and common service uniforms.

Queue F gets ``B = F^{-1}(U)`` and queue G gets ``B* = G^{-1}(U)`` for the same
uniform ``U``.  When both quantile functions agree below the splice level
``p``, customers with ``U < p`` are identical in both queues, and FB never lets
a customer older than ``c = F^{-1}(p)`` delay a younger one.  Hence the
sub-populations younger than ``c`` coincide and, at every instant,

    N_F(t) <= N_G(t) + K_p(t)

where ``K_p(t)`` counts arrivals up to ``t`` with ``U >= p``.  Both queues
are advanced in lockstep by the same time steps so the young sub-population
evolves through bit-identical arithmetic in each.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..dist import ServiceDistribution
from ..errors import CouplingConfigError, DomainError, SimulationTruncated
from .montecarlo import _map_chunks
from .queues import FBQueue
from .runs import DEFAULT_EVENT_CAP
from .streams import ArrivalStream, ServiceStream


@dataclass(frozen=True)
class CoupledPathRecord:
    events: int
    arrivals: int
    k_p: int
    max_f: int
    max_g: int
    final_f: int
    final_g: int
    dominance_violations: int  # epochs with N_F > N_G + K_p
    young_mismatches: int  # epochs with N_p != N_p*
    worst_excess: int  # max over epochs of N_F - N_G - K_p
    path: tuple | None = None  # (clock, N_F, N_G, K_p) per epoch when recorded


def check_quantile_agreement(dist_f, dist_g, p_splice: float, points: int = 2001, rtol: float = 1e-12):
    """Raise :class:`CouplingConfigError` unless both quantiles agree on [0, p_splice)."""
    if not 0.0 < p_splice <= 1.0:
        raise DomainError(f"splice level must lie in (0, 1], got {p_splice}")
    u = np.linspace(0.0, p_splice, points, endpoint=False)
    qf = np.asarray(dist_f.quantile(u))
    qg = np.asarray(dist_g.quantile(u))
    bad = np.abs(qf - qg) > rtol * np.maximum(1.0, np.abs(qf))
    if np.any(bad):
        u0 = float(u[np.argmax(bad)])
        raise CouplingConfigError(
            f"{dist_f.spec()} and {dist_g.spec()} disagree below p={p_splice} (first at u={u0:.6g})"
        )


def run_coupled(
    lam: float,
    dist_f: ServiceDistribution,
    dist_g: ServiceDistribution,
    p_splice: float,
    t_end: float,
    seed: int,
    index: int = 0,
    record_path: bool = False,
    event_cap: int = DEFAULT_EVENT_CAP,
    precheck: bool = True,
) -> CoupledPathRecord:
    """Simulate one coupled pair of FB queues over ``[0, t_end]`` from empty.

    Checks both pathwise relations at every event epoch.
    """
    if not lam > 0 or not t_end > 0:
        raise DomainError("lam and t_end must be positive")
    if precheck:
        check_quantile_agreement(dist_f, dist_g, p_splice)
    c = float(dist_f.quantile(p_splice)) if p_splice < 1.0 else math.inf

    arrivals_stream = ArrivalStream(lam, seed, index)
    services = ServiceStream((dist_f, dist_g), seed, index)
    qf, qg = FBQueue(), FBQueue()

    clock = 0.0
    arr = arrivals_stream.next()
    k_p = arrivals = events = 0
    max_f = max_g = 0
    dominance = young = 0
    worst = -math.inf
    path = [] if record_path else None

    while True:
        dtf = qf.next_internal()
        dtg = qg.next_internal()
        dt = dtf if dtf < dtg else dtg
        if arr - clock < dt:
            if arr > t_end:
                break
            step = arr - clock
            qf.advance(step)
            qg.advance(step)
            clock = arr
            u, bf, bg = services.next_coupled()
            qf.arrive(bf)
            qg.arrive(bg)
            arrivals += 1
            if u >= p_splice:
                k_p += 1
            arr = clock + arrivals_stream.next()
        else:
            if clock + dt > t_end:
                break
            clock += dt
            if dtf == dt:
                qf.fire()
            else:
                qf.advance(dt)
            if dtg == dt:
                qg.fire()
            else:
                qg.advance(dt)
        events += 1

        nf, ng = qf.n, qg.n
        excess = nf - ng - k_p
        if excess > worst:
            worst = excess
        if excess > 0:
            dominance += 1
        if qf.count_younger_than(c) != qg.count_younger_than(c):
            young += 1
        if nf > max_f:
            max_f = nf
        if ng > max_g:
            max_g = ng
        if path is not None:
            path.append((clock, nf, ng, k_p))
        if events > event_cap:
            raise SimulationTruncated(f"coupled run exceeded {event_cap} events", events, clock)

    return CoupledPathRecord(
        events=events,
        arrivals=arrivals,
        k_p=k_p,
        max_f=max_f,
        max_g=max_g,
        final_f=qf.n,
        final_g=qg.n,
        dominance_violations=dominance,
        young_mismatches=young,
        worst_excess=int(worst) if events else 0,
        path=tuple(path) if path is not None else None,
    )


@dataclass(frozen=True)
class CoupledSummary:
    paths: int
    events: int
    dominance_violations: int
    young_mismatches: int
    worst_excess: int
    mean_max_f: float
    mean_max_g: float
    mean_k_p: float


def _coupled_chunk(lam, dist_f, dist_g, p_splice, t_end, seed, event_cap, lo, hi):
    return [
        run_coupled(lam, dist_f, dist_g, p_splice, t_end, seed, i, event_cap=event_cap, precheck=False)
        for i in range(lo, hi)
    ]


def simulate_coupled(
    lam: float,
    dist_f: ServiceDistribution,
    dist_g: ServiceDistribution,
    p_splice: float,
    t_end: float,
    paths: int,
    seed: int,
    workers: int = 1,
    event_cap: int = DEFAULT_EVENT_CAP,
) -> CoupledSummary:
    """Run ``paths`` coupled pairs (path ``i`` seeded by ``(seed, i)``) and total the violations."""
    if paths < 1:
        raise ValueError("paths must be >= 1")
    check_quantile_agreement(dist_f, dist_g, p_splice)
    parts = _map_chunks(_coupled_chunk, (lam, dist_f, dist_g, p_splice, t_end, seed, event_cap), paths, workers)
    recs = [r for part in parts for r in part]
    return CoupledSummary(
        paths=len(recs),
        events=sum(r.events for r in recs),
        dominance_violations=sum(r.dominance_violations for r in recs),
        young_mismatches=sum(r.young_mismatches for r in recs),
        worst_excess=max(r.worst_excess for r in recs),
        mean_max_f=float(np.mean([r.max_f for r in recs])),
        mean_max_g=float(np.mean([r.max_g for r in recs])),
        mean_k_p=float(np.mean([r.k_p for r in recs])),
    )

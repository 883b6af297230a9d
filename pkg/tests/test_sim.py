import math

import numpy as np
import pytest

from fbqueue import analytics as an
from fbqueue.dist import Exponential, Pareto, Weibull, make_spliced
from fbqueue.errors import CouplingConfigError, DomainError, SimulationTruncated, UnstableQueueError
from fbqueue.sim import (
    ArrivalStream,
    FBQueue,
    QueueParams,
    ServiceStream,
    Streams,
    binomial_se,
    check_quantile_agreement,
    estimate_exceedance,
    exceedance_rows,
    format_trace,
    run_busy_cycle,
    run_coupled,
    run_horizon,
    simulate_coupled,
    simulate_cycles,
    simulate_horizons,
    verify_work_conservation,
    wilson_interval,
)
from fbqueue.sim.streams import JUMP, _Substreams


class Scripted:
    def __init__(self, values):
        self.values = list(values)

    def next(self):
        return self.values.pop(0)


def scripted(arrivals, services):
    return Streams(Scripted(arrivals), Scripted(services))


# A arrives at 1 (needs 3), B at 2 (needs 1), C at 2.5 (needs 2); nothing else.
GAPS = [1.0, 1.0, 0.5, 100.0]
REQS = [3.0, 1.0, 2.0]
DUMMY = QueueParams(0.1, Exponential(1.0), "fb")


def _params(disc):
    return QueueParams(DUMMY.lam, DUMMY.dist, disc)


def test_fb_hand_computed_cycle():
    # t=2: B (age 0) preempts A (age 1); t=2.5: C preempts B (age 0.5);
    # t=3: C catches up with B; B and C share, B leaves at 4 (age 1);
    # C has then caught up with A (both age 1) and they share; C leaves at 6, A at 7.
    trace = []
    rec = run_busy_cycle(_params("fb"), scripted(GAPS, REQS), trace=trace)
    kinds = [(ev.clock, ev.kind, ev.queue_len) for ev in trace]
    assert kinds == [
        (1.0, "arrival", 1),
        (2.0, "arrival", 2),
        (2.5, "arrival", 3),
        (3.0, "merge", 3),
        (4.0, "completion", 2),
        (6.0, "completion", 1),
        (7.0, "completion", 0),
    ]
    assert rec.max_len == 3
    assert rec.cycle_len == 7.0 and rec.busy_len == 6.0
    assert trace[3].served == (1.0, 2.0)
    assert dict((r, a) for r, a in trace[3].customers) == {1.0: 0.5, 2.0: 0.5, 3.0: 1.0}
    assert trace[4].served == (2.0, 3.0)
    assert format_trace(trace).splitlines()[0] == "1.0,arrival,1"
    assert verify_work_conservation(trace, "fb").passed


def test_fifo_hand_computed_cycle():
    trace = []
    rec = run_busy_cycle(_params("fifo"), scripted(GAPS, REQS), trace=trace)
    deps = [ev.clock for ev in trace if ev.kind == "completion"]
    assert deps == [4.0, 5.0, 7.0]
    assert rec.max_len == 3 and rec.cycle_len == 7.0
    assert verify_work_conservation(trace, "fifo").passed


def test_fbstar_hand_computed_cycle():
    trace = []
    rec = run_busy_cycle(_params("fbstar"), scripted(GAPS, REQS), trace=trace)
    deps = [ev.clock for ev in trace if ev.departures]
    # B leaves at 4, C at 5 (sub-busy period over), then A resumes at age 1
    assert deps == [4.0, 5.0, 7.0]
    assert rec.k_subbusy == 1 and rec.sub_maxima == (3,)
    assert rec.first_service == 3.0 and rec.max_len == 3
    assert verify_work_conservation(trace, "fbstar").passed


def test_simultaneous_completion_and_merge_prefers_completion():
    q = FBQueue()
    q.arrive(2.0)
    q.advance(1.0)
    q.arrive(1.0)  # will finish exactly when it reaches the older age 1
    dt = q.next_internal()
    assert dt == 1.0 and q.pending == "completion"
    q.advance(dt)
    assert q.fire() == 1
    assert q.n == 1


def test_equal_requirements_leave_together():
    q = FBQueue()
    q.arrive(1.0)
    q.arrive(1.0)
    assert q.next_internal() == 2.0
    assert q.fire() == 2
    assert q.n == 0 and q.next_internal() == math.inf


def test_trace_checker_catches_tampering():
    trace = []
    run_busy_cycle(_params("fb"), scripted(GAPS, REQS), trace=trace)
    bad = list(trace)
    ev = bad[4]
    bad[4] = type(ev)(ev.clock + 0.25, ev.kind, ev.queue_len, ev.customers, ev.served, ev.added, ev.departures)
    assert not verify_work_conservation(bad, "fb").passed


@pytest.mark.parametrize("disc", ["fb", "fbstar", "fifo"])
def test_work_conservation_many_cycles(disc):
    params = QueueParams(0.7, Pareto(3.0), disc)
    checked = 0
    for i in range(1000):
        trace = []
        run_busy_cycle(params, Streams.for_replication(params, 99, i), trace=trace)
        rep = verify_work_conservation(trace, disc)
        assert rep.passed, rep.failures[:3]
        checked += rep.checked
    assert checked > 3000


# --- streams and determinism -------------------------------------------------------

def test_substream_equals_pcg64_jumped():
    seed = 42
    for key in (0, 1):
        base = np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(key,)))
        sub = _Substreams(seed, key)
        for i in (1, 2, 7):
            sub.position(i)
            assert sub.bitgen.state == base.jumped(i).state
    assert JUMP % 2 == 1


def test_replication_streams_independent_of_order():
    a = ArrivalStream(1.0, 5, 3)
    first = [a.next() for _ in range(100)]
    other = ArrivalStream(1.0, 5, 4)
    [other.next() for _ in range(50)]
    again = ArrivalStream(1.0, 5, 3)
    assert [again.next() for _ in range(100)] == first
    s1 = ServiceStream(Pareto(4.0), 5, 3)
    s2 = ServiceStream((Pareto(4.0), Weibull(0.5)), 5, 3)
    for _ in range(40):
        u, b, w = s2.next_coupled()
        assert s1.next() == b == Pareto(4.0).quantile(u)
        assert w == Weibull(0.5).quantile(u)


def test_replications_uncorrelated():
    x = np.array([ArrivalStream(1.0, 3, i).next() for i in range(4000)])
    y = np.array([ArrivalStream(1.0, 3, i + 1).next() for i in range(4000)])
    assert abs(np.corrcoef(x, y)[0, 1]) < 0.06
    assert x.mean() == pytest.approx(1.0, abs=0.06)


def test_cycles_deterministic_across_workers():
    params = QueueParams(1.8, Pareto(4.0), "fb")
    a = simulate_cycles(params, 3000, seed=17, workers=1)
    b = simulate_cycles(params, 3000, seed=17, workers=2)
    c = simulate_cycles(params, 3000, seed=17, workers=3)
    assert np.array_equal(a.max_len, b.max_len) and np.array_equal(a.max_len, c.max_len)
    assert np.array_equal(a.cycle_len, b.cycle_len)
    d = simulate_cycles(params, 3000, seed=18)
    assert not np.array_equal(a.max_len, d.max_len)


def test_horizons_deterministic_across_workers():
    params = QueueParams(0.7, Pareto(3.0), "fifo")
    a = simulate_horizons(params, 200.0, 5, 300, seed=4, workers=1)
    b = simulate_horizons(params, 200.0, 5, 300, seed=4, workers=2)
    assert np.array_equal(a.max_len, b.max_len)
    assert np.array_equal(a.first_passage, b.first_passage, equal_nan=True)


# --- statistical checks -------------------------------------------------------

@pytest.mark.parametrize("disc", ["fb", "fifo"])
def test_mm1_law_any_discipline(disc):
    # with exponential service the number in system does not depend on the order of service
    est = estimate_exceedance(QueueParams(1.0, Exponential(2.0), disc), 4, 20_000, seed=3)
    for r in est[1:]:
        exact = an.mm1_exceedance(0.5, r.n)
        assert abs(r.r_hat - exact) <= 4 * binomial_se(exact, 20_000)


def test_fb_respects_rho_bound_weibull():
    w = Weibull(0.5)
    lam = 0.8 / w.mean()
    est = estimate_exceedance(QueueParams(lam, w, "fb"), 6, 20_000, seed=8)
    for r in est:
        b = 0.8**r.n
        assert r.r_hat <= b + 3 * binomial_se(b, 20_000)


def test_cycle_length_mean():
    params = QueueParams(1.0, Exponential(2.0), "fb")
    batch = simulate_cycles(params, 20_000, seed=5)
    mu = an.cycle_mean(1.0, 0.5)
    assert batch.cycle_len.mean() == pytest.approx(mu, rel=0.05)


def test_fbstar_poisson_subbusy_count():
    from scipy import stats

    params = QueueParams(1.0, Exponential(2.0), "fbstar")
    batch = simulate_cycles(params, 5000, seed=12, first_service=2.0)
    assert np.all(batch.first_service == 2.0)
    k = batch.k_subbusy
    assert k.mean() == pytest.approx(2.0, abs=4 * math.sqrt(2.0 / 5000))
    counts = np.bincount(k, minlength=8)[:6]
    expected = stats.poisson.pmf(np.arange(6), 2.0) * 5000
    chi2 = float(((counts - expected) ** 2 / expected).sum())
    assert chi2 < stats.chi2.ppf(0.999, 6)


def test_fbstar_max_is_max_of_subperiods():
    params = QueueParams(1.0, Exponential(2.0), "fbstar")
    batch = simulate_cycles(params, 2000, seed=13, keep_sub_maxima=True)
    for m, sub, k in zip(batch.max_len, batch.sub_maxima, batch.k_subbusy):
        assert len(sub) == k
        assert m == (max(sub) if sub else 1)


def test_first_passage_d_zero():
    params = QueueParams(1.0, Exponential(2.0), "fb")
    res = run_horizon(params, 100.0, 0, Streams.for_replication(params, 1, 0))
    first_arrival = ArrivalStream(1.0, 1, 0).next()
    assert res.first_passage == first_arrival
    assert res.max_len >= 1


def test_horizon_maximum_is_monotone_in_horizon():
    params = QueueParams(0.7, Pareto(3.0), "fb")
    a = simulate_horizons(params, 100.0, 10**6, 200, seed=2)
    b = simulate_horizons(params, 1000.0, 10**6, 200, seed=2)
    assert np.all(b.max_len >= a.max_len)


# --- guards -------------------------------------------------------

def test_unstable_requires_opt_in_and_event_cap():
    params = QueueParams(1.0, Exponential(0.5), "fb")
    with pytest.raises(UnstableQueueError):
        simulate_cycles(params, 10, seed=1)
    with pytest.raises(SimulationTruncated) as info:
        simulate_cycles(params, 10, seed=1, allow_unstable=True, event_cap=2000)
    assert info.value.events > 2000


def test_params_validation():
    with pytest.raises(DomainError):
        QueueParams(0.0, Exponential(1.0))
    with pytest.raises(DomainError):
        QueueParams(1.0, Exponential(1.0), "ps")


# --- estimators -------------------------------------------------------

def test_wilson_interval_oracle():
    z = 1.959963984540054
    for k, n in ((0, 10), (3, 10), (10, 10), (500, 100_000)):
        p = k / n
        centre = (p + z * z / (2 * n)) / (1 + z * z / n)
        half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / (1 + z * z / n)
        lo, hi = wilson_interval(k, n)
        assert lo == pytest.approx(max(0.0, centre - half), abs=1e-14)
        assert hi == pytest.approx(min(1.0, centre + half), abs=1e-14)
        assert lo <= p <= hi


def test_exceedance_rows_counts():
    rows = exceedance_rows(np.array([1, 1, 2, 3, 5]), 6)
    assert [r.r_hat for r in rows] == [1.0, 0.6, 0.4, 0.2, 0.2, 0.0, 0.0]
    assert all(r.cycles == 5 for r in rows)


def test_binomial_se():
    assert binomial_se(0.5, 100) == pytest.approx(0.05)
    assert binomial_se(1.0, 100) == 0.0


# --- coupling -------------------------------------------------------

def test_quantile_agreement_precheck():
    check_quantile_agreement(Pareto(2.0), make_spliced(10.0), 1 - 1 / 11)
    with pytest.raises(CouplingConfigError):
        check_quantile_agreement(Pareto(3.0), make_spliced(10.0), 1 - 1 / 11)
    with pytest.raises(CouplingConfigError):
        check_quantile_agreement(Pareto(2.0), make_spliced(10.0), 0.95)


def test_coupled_path_relations():
    f, g = Pareto(2.0), make_spliced(10.0)
    rec = run_coupled(0.1, f, g, 1 - 1 / 11, 2000.0, seed=3, index=5, record_path=True)
    assert rec.dominance_violations == 0 and rec.young_mismatches == 0
    assert rec.path and all(nf <= ng + kp for _, nf, ng, kp in rec.path)
    assert rec.worst_excess <= 0
    again = run_coupled(0.1, f, g, 1 - 1 / 11, 2000.0, seed=3, index=5, record_path=True)
    assert again.path == rec.path


def test_coupled_identical_laws_agree():
    f = Pareto(3.0)
    rec = run_coupled(0.5, f, f, 1.0, 500.0, seed=1, record_path=True)
    assert rec.k_p == 0
    assert all(nf == ng for _, nf, ng, _ in rec.path)


def test_coupled_batch():
    s = simulate_coupled(0.1, Pareto(2.0), make_spliced(10.0), 1 - 1 / 11, 1000.0, 300, seed=9, workers=2)
    assert s.paths == 300
    assert s.dominance_violations == 0 and s.young_mismatches == 0
    assert s.mean_k_p == pytest.approx(0.1 * 1000 / 11, rel=0.15)

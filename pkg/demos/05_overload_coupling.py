"""Overload: an infinite-mean service law and a stable surrogate.

With service density (1 + x)^-2 the mean is infinite, so the queue is
never stable.  Replacing the tail beyond a by an exponential one gives a
log-convex law with finite mean.  Coupling the two queues through common
quantiles shows the original never holds more customers than the surrogate
plus the number of jobs longer than a.  That yields a finite-horizon bound.
"""

from fbqueue import analytics
from fbqueue.dist import Pareto, make_spliced
from fbqueue.sim import simulate_coupled

lam, a = 0.1, 10.0
f, g = Pareto(alpha=2.0), make_spliced(a)
print(f"surrogate mean {g.mean():.4f}, load {lam * g.mean():.4f}")
print(f"critical value c* = {analytics.critical_value(f, lam):.6f}")

#%% Pathwise dominance on a few hundred coupled paths
summary = simulate_coupled(lam, f, g, float(f.cdf(a)), t_end=500.0, paths=300, seed=11)
print(f"{summary.paths} paths, {summary.events} epochs, {summary.dominance_violations} violations")

#%% Finite-horizon bound on P(M(t) > x) for the overloaded queue
lam, a = 0.05, 1e6
for t in (1e6, 1e8, 1e10):
    b = analytics.unstable_overflow_bound(t, 100, a, lam)
    print(f"  t={t:.0e}  bound {b.bound:.4g}  split x1={b.x1} x2={b.x2}")

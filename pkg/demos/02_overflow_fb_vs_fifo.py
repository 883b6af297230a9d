"""How long until a finite buffer overflows, FB versus FIFO.

Under FB a buffer of size d is almost never exceeded when the queue is
stable, because rho^d decays geometrically.  FIFO overflows as soon as one
customer long enough to pile up d arrivals shows up, which for heavy tails
is comparatively soon.  Times are in units of the mean service scale.
"""

from fbqueue import analytics
from fbqueue.dist import Pareto, Weibull

d, p = 1000, 0.5

#%% Pareto(4), rho = 0.9
par = Pareto(alpha=4.0)
fb = analytics.overflow_quantile(d, p, 1.8, dist=par)
fifo = analytics.fifo_overflow_median(d, 1.8, par)
print(f"Pareto(4): FB median >= {fb.t_quantile:.3e}   FIFO median ~ {fifo.t_median:.3e}")

#%% Weibull tails, rho = 0.9, on a log10 scale
for beta in (0.25, 0.5):
    w = Weibull(beta=beta)
    lam = 0.9 / w.mean()
    fb = analytics.overflow_quantile(d, p, lam, dist=w)
    fifo = analytics.fifo_overflow_median(d, lam, w)
    print(f"Weibull({beta}): log10 FB {fb.log10_t:.1f}   log10 FIFO {fifo.log10_t:.1f}")

#%% Growth with the buffer size
for size in (1, 10, 100, 1000):
    r = analytics.overflow_quantile(size, p, 1.8, dist=par)
    print(f"  d={size:5d}  log10 t = {r.log10_t:8.2f}")

"""Simulated queue maxima over a fixed horizon, FB against FIFO.

Both disciplines see the same arrivals and service requirements, so the
difference in their maxima is a paired comparison.  FB keeps the queue
short by starving only the long jobs.
"""

import numpy as np

from fbqueue.dist import Pareto
from fbqueue.sim import QueueParams, simulate_horizons

par = Pareto(alpha=4.0)
lam, t_end, reps = 1.8, 2000.0, 2000

res = {}
for disc in ("fb", "fifo"):
    res[disc] = simulate_horizons(QueueParams(lam, par, disc), t_end, d=20, replications=reps, seed=7)

diff = res["fifo"].max_len - res["fb"].max_len
print(f"mean max  FB {res['fb'].max_len.mean():.2f}  FIFO {res['fifo'].max_len.mean():.2f}")
print(f"paired difference {diff.mean():.2f} +- {diff.std(ddof=1) / np.sqrt(reps):.3f}")

#%% Fraction of runs in which the queue ever exceeded 20
for disc, batch in res.items():
    hit = np.isfinite(batch.first_passage)
    print(f"{disc:5s} exceeded d=20 in {hit.mean():.3f} of runs")

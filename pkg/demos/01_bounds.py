"""Exceedance bounds for the busy-period maximum under FB.

For an exponential service law the maximum queue length in a busy period
has a closed form, and rho^n is an upper bound on it.  For heavier tails
the recursively defined q-sequence is much tighter than rho^n.  We print
both, then check the bounds against a short simulation.
"""

from fbqueue import analytics
from fbqueue.dist import Exponential, Pareto
from fbqueue.sim import QueueParams, estimate_exceedance

#%% Exponential service, rho = 0.5
exp2 = Exponential(rate=2.0)
lam = 1.0
rho = analytics.load(exp2, lam)
print(f"exponential: rho = {rho}")
for n in range(6):
    print(f"  n={n}  exact {analytics.mm1_exceedance(rho, n):.5f}  rho^n {analytics.rho_bound(rho, n):.5f}")

#%% Pareto(4) at rho = 0.9: how far below rho^n does q_n sit?
par = Pareto(alpha=4.0)
table = analytics.q_table(par, 1.8, 100)
for n in (1, 10, 50, 100):
    print(f"  n={n:3d}  rho^n {analytics.rho_bound(0.9, n):.3e}  q_n {table.q(n):.3e}")
print(f"q_1 rho^(n-1) / q_n at n=100: {table.ratio_rho_vs_q(100):.2f}")

#%% Simulated exceedance stays under the bound
rows = estimate_exceedance(QueueParams(1.8, par, "fb"), n_max=6, cycles=20_000, seed=1)
for r in rows:
    bound = analytics.rho_bound(0.9, r.n)
    print(f"  n={r.n}  r_hat {r.r_hat:.4f}  [{r.ci_low:.4f}, {r.ci_high:.4f}]  rho^n {bound:.4f}")
assert all(r.ci_low <= analytics.rho_bound(0.9, r.n) for r in rows)

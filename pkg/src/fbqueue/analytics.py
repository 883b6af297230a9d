"""Exceedance bounds, overflow-time quantiles and the unstable-queue bound.

Notation: ``lam`` is the Poisson arrival rate, ``rho = lam * E[B]`` the load,
``M`` the maximum number of customers present during one busy period and
``r_n = P(M > n)``.  For service laws with a log-convex density under FB:

* ``r_1 = 1 - E exp(-lam B)`` exactly,
* ``r_n <= q_n`` where ``q_0 = 1`` and ``q_{n+1} = 1 - E exp(-lam B q_n)``,
* ``q_n <= rho^n``.

Anything involving ``rho**d`` for large ``d`` is carried in log space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

from scipy import special

from .dist import Exponential, ServiceDistribution, make_spliced
from .errors import DomainError, UnstableQueueError, VacuousBoundError

BoundKind = Literal["rho_pow", "q_sequence", "exact_mm1"]
BOUND_KINDS = ("rho_pow", "q_sequence", "exact_mm1")

__all__ = [
    "BoundRow",
    "BoundTable",
    "OverflowReport",
    "FifoOverflowEstimate",
    "ParetoTheta",
    "UnstableBound",
    "mm1_exceedance",
    "log_mm1_exceedance",
    "rho_bound",
    "log_rho_bound",
    "load",
    "r1_exact",
    "q_table",
    "log_q_sequence",
    "pareto_theta",
    "cycle_mean",
    "overflow_quantile",
    "fifo_overflow_median",
    "max_interval_prob",
    "critical_value",
    "poisson_tail",
    "unstable_overflow_bound",
]


def _check_rho(rho: float) -> float:
    rho = float(rho)
    if not 0.0 < rho < 1.0:
        raise DomainError(f"load must lie in (0, 1), got {rho}")
    return rho


def _check_level(n) -> int:
    if int(n) != n or n < 0:
        raise DomainError(f"level must be a nonnegative integer, got {n}")
    return int(n)


def _log1mexp(x: float) -> float:
    """``log(1 - exp(x))`` for ``x <= 0``."""
    if x > -math.log(2.0):
        return math.log(-math.expm1(x))
    return math.log1p(-math.exp(x))


def log_mm1_exceedance(rho: float, n: int) -> float:
    rho, n = _check_rho(rho), _check_level(n)
    lr = math.log(rho)
    return n * lr + math.log1p(-rho) - _log1mexp((n + 1) * lr)


def mm1_exceedance(rho: float, n: int) -> float:
    """Exact ``P(M > n)`` in the M/M/1 queue: ``rho^n (1 - rho) / (1 - rho^(n+1))``."""
    return math.exp(log_mm1_exceedance(rho, n))


def log_rho_bound(rho: float, n: int) -> float:
    rho, n = _check_rho(rho), _check_level(n)
    return n * math.log(rho)


def rho_bound(rho: float, n: int) -> float:
    """The distribution-free FB bound ``P(M > n) <= rho^n``."""
    return math.exp(log_rho_bound(rho, n))


def load(dist: ServiceDistribution, lam: float) -> float:
    if not lam > 0:
        raise DomainError(f"arrival rate must be positive, got {lam}")
    return lam * dist.mean()


def _stable_load(dist: ServiceDistribution, lam: float) -> float:
    rho = load(dist, lam)
    if math.isinf(rho):
        raise UnstableQueueError(
            f"{dist.spec()} has infinite mean; truncate its tail (see make_spliced) "
            "and use unstable_overflow_bound"
        )
    if rho >= 1.0:
        raise UnstableQueueError(
            f"load {rho:.6g} >= 1; use critical_value / unstable_overflow_bound instead"
        )
    return rho


def r1_exact(dist: ServiceDistribution, lam: float) -> float:
    """``P(M > 1) = 1 - E exp(-lam B)``: the first arrival beats the first departure."""
    if not lam > 0:
        raise DomainError(f"arrival rate must be positive, got {lam}")
    return dist.laplace_complement(lam)


def log_q_sequence(dist: ServiceDistribution, lam: float, n_max: int) -> list[float]:
    """``log q_n`` for n = 0..n_max, computed without underflow.

    Uses ``q_{n+1} = q_n * lam * h(lam q_n)`` with
    ``h(s) = (1 - E e^{-sB}) / s``, which tends to ``E[B]`` as ``s -> 0``.
    """
    _stable_load(dist, lam)
    n_max = _check_level(n_max)
    mean = dist.mean()
    out = [0.0]
    for _ in range(n_max):
        lq = out[-1]
        s = lam * math.exp(lq)
        if s > 0.0:
            ratio = dist.laplace_complement(s) / s
        else:
            ratio = mean
        out.append(lq + math.log(lam * ratio))
    return out


@dataclass(frozen=True)
class BoundRow:
    n: int
    rho_pow: float
    q: float
    log_q: float
    exact_mm1: float | None = None
    r1_exact: float | None = None


@dataclass(frozen=True)
class BoundTable:
    """Per-level upper bounds on ``P(M > n)``."""

    lam: float
    dist: ServiceDistribution
    rho: float
    rows: tuple[BoundRow, ...]

    def q(self, n: int) -> float:
        return self.rows[n].q

    def ratio_rho_vs_q(self, n: int) -> float:
        """``r_1 rho^(n-1) / q_n``: how much sharper ``q_n`` is than the r1-scaled power bound."""
        if n < 1:
            raise DomainError("ratio is defined for n >= 1")
        log_r1 = math.log(self.rows[1].q)
        return math.exp(log_r1 + (n - 1) * math.log(self.rho) - self.rows[n].log_q)


def q_table(dist: ServiceDistribution, lam: float, n_max: int) -> BoundTable:
    """Tabulate ``rho^n`` and the recursive bound ``q_n`` for n = 0..n_max.

    ``exact_mm1`` is filled in when ``dist`` is exponential, where the queue
    length process does not depend on the (non-anticipating) discipline.
    """
    rho = _stable_load(dist, lam)
    log_q = log_q_sequence(dist, lam, n_max)
    exponential = isinstance(dist, Exponential)
    rows = []
    for n, lq in enumerate(log_q):
        rows.append(
            BoundRow(
                n=n,
                rho_pow=rho_bound(rho, n),
                q=math.exp(lq),
                log_q=lq,
                exact_mm1=mm1_exceedance(rho, n) if exponential else None,
                r1_exact=math.exp(lq) if n == 1 else None,
            )
        )
    return BoundTable(lam=float(lam), dist=dist, rho=rho, rows=tuple(rows))


@dataclass(frozen=True)
class ParetoTheta:
    """Result of :func:`pareto_theta`.

    ``theta`` is ``lam / ((alpha-1)(alpha-2) c^2)`` as in the published
    corollary.  ``dominating_load`` is ``lam * E[B']`` for the law with tail
    ``(1 + c x)^-alpha``, which is log-convex, so ``dominating_load^n`` is a
    valid bound whenever it is below one.  ``theta`` is not scale invariant
    and can fall below the exact ``r_1`` (e.g. alpha=4, c=1, lam=1.8), so
    prefer ``dominating_load`` when a guaranteed bound is needed.
    """

    theta: float
    vacuous: bool
    dominating_load: float


def pareto_theta(lam: float, alpha: float, c: float) -> ParetoTheta:
    if not alpha > 2:
        raise DomainError(f"alpha must exceed 2, got {alpha}")
    if not c > 0 or not lam > 0:
        raise DomainError("lam and c must be positive")
    theta = lam / ((alpha - 1.0) * (alpha - 2.0) * c * c)
    return ParetoTheta(theta=theta, vacuous=theta >= 1.0, dominating_load=lam / (c * (alpha - 1.0)))


def cycle_mean(lam: float, rho: float) -> float:
    """Expected idle-plus-busy cycle length ``1 / (lam (1 - rho))``."""
    if not lam > 0:
        raise DomainError(f"arrival rate must be positive, got {lam}")
    if not 0.0 <= rho < 1.0:
        raise DomainError(f"load must lie in [0, 1), got {rho}")
    return 1.0 / (lam * (1.0 - rho))


@dataclass(frozen=True)
class OverflowReport:
    """Asymptotic lower ``p``-quantile of the time until the queue exceeds ``d``.

    ``t_quantile`` is ``exp(log_t)`` and may overflow to ``inf`` for very large
    buffers; ``log10_t`` is always finite.  The equality behind it holds as
    ``d -> inf`` (``asymptotic`` is always True).
    """

    d: int
    p: float
    lam: float
    rho: float
    mu: float
    bound_kind: str
    log_exceed_bound: float
    pm_le_d_lower: float
    log_t: float
    t_quantile: float
    log10_t: float
    asymptotic: bool = True
    dist: str = ""

    def as_dict(self) -> dict:
        return {
            "d": self.d,
            "p": self.p,
            "lambda": self.lam,
            "rho": self.rho,
            "mu": self.mu,
            "dist": self.dist,
            "bound_kind": self.bound_kind,
            "log_exceed_bound": self.log_exceed_bound,
            "pm_le_d_lower": self.pm_le_d_lower,
            "t_quantile": self.t_quantile,
            "log10_t_quantile": self.log10_t,
            "asymptotic": self.asymptotic,
        }


def _log_neg_log1m(log_b: float) -> float:
    """``log(-log(1 - b))`` given ``log b``, exact for tiny ``b``."""
    if log_b < -20.0:
        b = math.exp(log_b)
        # -log(1-b) = b (1 + b/2 + b^2/3 + ...)
        return log_b + math.log1p(b / 2.0 + b * b / 3.0)
    return math.log(-_log1mexp(log_b))


def _log_exceed_bound(kind: str, d: int, dist: ServiceDistribution, lam: float, rho: float) -> float:
    if kind == "rho_pow":
        return log_rho_bound(rho, d)
    if kind == "q_sequence":
        return log_q_sequence(dist, lam, d)[d]
    if kind == "exact_mm1":
        if not isinstance(dist, Exponential):
            raise DomainError("exact_mm1 bound requires exponential service times")
        return log_mm1_exceedance(rho, d)
    raise DomainError(f"unknown bound kind {kind!r}; choose from {BOUND_KINDS}")


def overflow_quantile(
    d: int,
    p: float,
    lam: float,
    bound: str = "rho_pow",
    dist: ServiceDistribution | None = None,
    rho: float | None = None,
) -> OverflowReport:
    """``t_{d,p} ~ mu log(1 - p) / log(1 - b_d)`` with ``b_d`` an upper bound on ``P(M > d)``.

    Either ``dist`` or ``rho`` must be given; ``q_sequence`` and ``exact_mm1``
    need ``dist``.  Since ``b_d >= P(M > d)`` the result is an asymptotic
    lower bound on the true quantile.
    """
    d = _check_level(d)
    if d < 1:
        raise DomainError("buffer size must be at least 1")
    if not 0.0 < p < 1.0:
        raise DomainError(f"risk level must lie in (0, 1), got {p}")
    if dist is not None:
        rho = _stable_load(dist, lam)
    elif rho is None:
        raise DomainError("need either dist or rho")
    elif bound != "rho_pow":
        raise DomainError(f"bound {bound!r} needs the service distribution")
    rho = _check_rho(rho)
    mu = cycle_mean(lam, rho)

    log_b = _log_exceed_bound(bound, d, dist, lam, rho)
    if log_b >= 0.0:
        raise VacuousBoundError(f"bound on P(M > {d}) is >= 1")
    log_t = math.log(mu) + math.log(-math.log1p(-p)) - _log_neg_log1m(log_b)
    return OverflowReport(
        d=d,
        p=float(p),
        lam=float(lam),
        rho=rho,
        mu=mu,
        bound_kind=bound,
        log_exceed_bound=log_b,
        pm_le_d_lower=math.exp(_log1mexp(log_b)),
        log_t=log_t,
        t_quantile=math.exp(log_t) if log_t < 709.0 else math.inf,
        log10_t=log_t / math.log(10.0),
        dist=dist.spec() if dist is not None else "",
    )


@dataclass(frozen=True)
class FifoOverflowEstimate:
    """Heuristic FIFO overflow median from one very long service time."""

    t_median: float
    log10_t: float
    threshold: float
    log_tail: float
    underflow: bool


def fifo_overflow_median(d: int, lam: float, dist: ServiceDistribution, k_sigma: float = 3.0) -> FifoOverflowEstimate:
    """Median time until a customer longer than ``d/lam + k_sigma sqrt(d/lam)`` arrives.

    Such a customer is taken to overflow a FIFO buffer of size ``d`` (the
    backlog built up behind it is Poisson with mean ``lam`` times its
    service).  Solves ``1 - exp(-lam t P(B > threshold)) = 1/2``.  This is a
    rough order-of-magnitude heuristic, not a bound.
    """
    d = _check_level(d)
    if d < 1:
        raise DomainError("buffer size must be at least 1")
    if not lam > 0:
        raise DomainError(f"arrival rate must be positive, got {lam}")
    base = d / lam
    threshold = base + k_sigma * math.sqrt(base)
    log_tail = float(dist.logsf(threshold))
    if log_tail == -math.inf:
        return FifoOverflowEstimate(math.inf, math.inf, threshold, log_tail, True)
    log_t = math.log(math.log(2.0)) - math.log(lam) - log_tail
    t = math.exp(log_t) if log_t < 709.0 else math.inf
    return FifoOverflowEstimate(t, log_t / math.log(10.0), threshold, log_tail, math.isinf(t))


def max_interval_prob(d: int, t: float, mu: float, pm_le_d: float) -> float:
    """Regenerative approximation ``P(M(t) <= d) ~ P(M <= d)^(t / mu)``.

    ``d`` only labels the level; the busy-period probability is passed in.
    """
    if not t > 0 or not mu > 0:
        raise DomainError("t and mu must be positive")
    if not 0.0 < pm_le_d <= 1.0:
        raise DomainError(f"P(M <= d) must lie in (0, 1], got {pm_le_d}")
    if pm_le_d == 1.0:
        return 1.0
    return math.exp((t / mu) * math.log(pm_le_d))


def critical_value(dist: ServiceDistribution, lam: float, tol: float = 1e-12) -> float:
    """``c* = inf{c : lam E[min(B, c)] >= 1}``; ``inf`` for a stable queue.

    Customers shorter than ``c*`` eventually leave an overloaded FB queue.
    Found by bisection on the nondecreasing truncated mean.
    """
    if not lam > 0:
        raise DomainError(f"arrival rate must be positive, got {lam}")
    if lam * dist.mean() <= 1.0:
        return math.inf

    def short(c):
        return lam * dist.truncated_mean(c) < 1.0

    lo, hi = 0.0, 1.0
    while short(hi):
        lo, hi = hi, 2.0 * hi
    while hi - lo > tol * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if short(mid):
            lo = mid
        else:
            hi = mid
    return hi


def poisson_tail(nu: float, k: int) -> float:
    """``P(Poisson(nu) >= k)``, accurate for tiny ``nu``."""
    if nu < 0:
        raise DomainError(f"Poisson mean must be >= 0, got {nu}")
    k = _check_level(k)
    if k == 0:
        return 1.0
    if nu == 0.0:
        return 0.0
    # P(N >= k) equals the regularised lower incomplete gamma P(k, nu).
    return float(special.gammainc(k, nu))


@dataclass(frozen=True)
class UnstableBound:
    """Bound on ``P(M(t) > x)`` for an overloaded FB queue via a log-convex surrogate."""

    bound: float
    x1: int
    x2: int
    surrogate_term: float
    poisson_term: float
    rho_a: float
    mu_a: float
    bound_kind: str


def _surrogate_exceed(log_b: float, t: float, mu: float) -> float:
    # 1 - (1 - b)^(t/mu) computed stably
    if log_b == -math.inf:
        return 0.0
    if log_b >= 0.0:
        return 1.0
    return -math.expm1((t / mu) * _log1mexp(log_b))


def unstable_overflow_bound(
    t: float,
    x: int,
    a: float,
    lam: float,
    x1: int | None = None,
    bound: str = "rho_pow",
    max_x2: int = 64,
) -> UnstableBound:
    """Bound ``P(M(t) > x)`` for FB with service density ``(1 + x)^-2`` (infinite mean).

    The tail beyond ``a`` is replaced by an exponential one (see
    :func:`~fbqueue.dist.make_spliced`).  The coupled surrogate queue has load
    ``lam (log(a+1) + 1)``; its horizon maximum is bounded with the
    regenerative approximation and the chosen exceedance bound.  Customers
    longer than ``a`` arrive as a Poisson process of rate ``lam / (1 + a)``.
    With ``x1 + x2 = x``::

        P(M(t) > x) <= P(M_a(t) > x1) + P(K_a(t) >= x2)

    When ``x1`` is None the split is optimised over ``x2 in 0..min(x, max_x2)``.
    """
    x = _check_level(x)
    if t < 0:
        raise DomainError("t must be >= 0")
    g = make_spliced(a)
    rho_a = lam * g.mean()
    if rho_a >= 1.0:
        raise UnstableQueueError(
            f"surrogate load {rho_a:.6g} >= 1; choose a smaller splice point or arrival rate"
        )
    mu_a = cycle_mean(lam, rho_a)
    nu = lam * t / (1.0 + a)

    if x1 is None:
        splits = range(0, min(x, max_x2) + 1)
    else:
        if not 0 <= x1 <= x:
            raise DomainError("x1 must lie in [0, x]")
        splits = [x - int(x1)]

    need = max(x - s for s in splits)
    if bound == "q_sequence":
        log_b = log_q_sequence(g, lam, need)
    elif bound == "rho_pow":
        log_b = [n * math.log(rho_a) for n in range(need + 1)]
    else:
        raise DomainError(f"unstable bound supports rho_pow or q_sequence, not {bound!r}")

    best = None
    for x2 in splits:
        first = _surrogate_exceed(log_b[x - x2], t, mu_a) if t > 0 else 0.0
        second = poisson_tail(nu, x2)
        total = min(1.0, first + second)
        if best is None or total < best.bound:
            best = UnstableBound(total, x - x2, x2, first, second, rho_a, mu_a, bound)
    return best

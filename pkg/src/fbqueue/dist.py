"""Service-time laws with log-convex densities.

Five families are provided: :class:`Exponential`, :class:`Pareto`,
:class:`Weibull`, :class:`GammaDLR` and :class:`SplicedParetoExp`.  Each one is
an immutable dataclass exposing density, distribution function, quantile,
mean, truncated mean ``E[min(B, c)]`` and the Laplace transform ``E exp(-sB)``.

Pointwise functions accept scalars or array-likes and return a float for
scalar input.  Sampling is always inverse-transform through
:meth:`ServiceDistribution.sample`, so two queues fed with the same uniforms
see coupled service times.
"""

from __future__ import annotations

import math
import re
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import ClassVar

import numpy as np
from scipy import integrate, special

from .errors import DomainError

__all__ = [
    "ServiceDistribution",
    "Exponential",
    "Pareto",
    "Weibull",
    "GammaDLR",
    "SplicedParetoExp",
    "LogConvexReport",
    "make_spliced",
    "check_log_convex",
    "parse_dist",
]

# Relative accuracy targeted by the quadrature paths.
_QUAD_RTOL = 1e-13
# Decade ladder used to split heavy-tailed integrands.
_LADDER = (1e-6, 1e-4, 1e-2) + tuple(10.0**k for k in range(0, 301))


def _support(x):
    arr = np.asarray(x, dtype=float)
    if np.any(np.isnan(arr)) or np.any(arr < 0):
        raise DomainError(f"service time argument must be >= 0, got {x!r}")
    return arr


def _level(u):
    arr = np.asarray(u, dtype=float)
    if np.any(np.isnan(arr)) or np.any(arr < 0) or np.any(arr >= 1):
        raise DomainError(f"quantile level must lie in [0, 1), got {u!r}")
    return arr


def _like(value, template):
    if np.ndim(template) == 0:
        return float(value)
    return value


class ServiceDistribution(ABC):
    """Common interface of the service-time families.

    Subclasses implement the log-density, log-survival function and quantile
    on numpy arrays; everything else is derived here.
    """

    kind: ClassVar[str] = ""

    # --- per-family hooks -------------------------------------------------
    @abstractmethod
    def _logpdf(self, x: np.ndarray) -> np.ndarray: ...

    @abstractmethod
    def _logsf(self, x: np.ndarray) -> np.ndarray: ...

    @abstractmethod
    def _quantile(self, u: np.ndarray) -> np.ndarray: ...

    @abstractmethod
    def mean(self) -> float:
        """Expected service time, ``math.inf`` when it diverges."""

    @abstractmethod
    def truncated_mean(self, c: float) -> float:
        """``E[min(B, c)]``, i.e. the integral of the survival function on [0, c]."""

    @abstractmethod
    def spec(self) -> str:
        """Textual form understood by :func:`parse_dist`."""

    def _cdf(self, x: np.ndarray) -> np.ndarray:
        return -np.expm1(self._logsf(x))

    def knots(self) -> tuple[float, ...]:
        """Points where the density changes character (used to split integrals)."""
        return ()

    # --- pointwise functions ----------------------------------------------
    def logpdf(self, x):
        arr = _support(x)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = self._logpdf(arr)
        return _like(out, x)

    def pdf(self, x):
        arr = _support(x)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            out = np.exp(self._logpdf(arr))
        return _like(out, x)

    def logsf(self, x):
        arr = _support(x)
        with np.errstate(divide="ignore"):
            out = self._logsf(arr)
        return _like(out, x)

    def sf(self, x):
        arr = _support(x)
        with np.errstate(divide="ignore"):
            out = np.exp(self._logsf(arr))
        return _like(out, x)

    def cdf(self, x):
        arr = _support(x)
        with np.errstate(divide="ignore"):
            out = self._cdf(arr)
        return _like(out, x)

    def quantile(self, u):
        """Generalised inverse ``inf{x : F(x) >= u}`` for ``u`` in [0, 1)."""
        arr = _level(u)
        out = np.where(arr == 0.0, 0.0, self._quantile(arr))
        return _like(out, u)

    def sample(self, u):
        """Map uniforms to service times; the only sampling path in the package."""
        return self.quantile(u)

    def sample_block(self, u: np.ndarray) -> np.ndarray:
        """:meth:`sample` for a float array already known to lie in [0, 1)."""
        with np.errstate(over="ignore"):
            return np.where(u == 0.0, 0.0, self._quantile(u))

    # --- transforms -------------------------------------------------------
    def laplace(self, s: float) -> float:
        """``E exp(-sB)`` for ``s >= 0``."""
        s = self._check_transform_arg(s)
        if s == 0.0:
            return 1.0
        comp = self._laplace_complement(s)
        if comp <= 0.5:
            return 1.0 - comp
        return self._laplace_direct(s)

    def laplace_complement(self, s: float) -> float:
        """``1 - E exp(-sB)``, accurate when ``s`` is tiny."""
        s = self._check_transform_arg(s)
        if s == 0.0:
            return 0.0
        comp = self._laplace_complement(s)
        if comp <= 0.5:
            return comp
        return 1.0 - self._laplace_direct(s)

    @staticmethod
    def _check_transform_arg(s) -> float:
        s = float(s)
        if math.isnan(s) or s < 0:
            raise DomainError(f"Laplace argument must be >= 0, got {s!r}")
        return s

    def _laplace_complement(self, s: float) -> float:
        # 1 - E e^{-sB} = s * int_0^inf e^{-sx} P(B > x) dx
        return s * _ladder_integral(
            lambda x: math.exp(-s * x + float(self._logsf(np.asarray(x)))),
            self.knots(),
            lambda x: self._survival_remainder(s, x),
        )

    def _survival_remainder(self, s: float, x: float) -> float:
        # Upper bound for int_x^inf e^{-sy} P(B > y) dy.
        bound = math.inf
        logsf = float(self._logsf(np.asarray(x)))
        if s > 0:
            bound = math.exp(-s * x + logsf) / s
        m = self.mean()
        if math.isfinite(m):
            bound = min(bound, max(m - self.truncated_mean(x), 0.0))
        return bound

    def _laplace_direct(self, s: float) -> float:
        # E e^{-sB} = int_0^1 exp(-s Q(u)) du; the integrand is bounded and smooth
        # away from u = 1 where it vanishes.
        cuts = sorted({float(self.cdf(k)) for k in self.knots() + (1.0,)} - {0.0, 1.0})

        def integrand(u):
            return math.exp(-s * float(self._quantile(np.asarray(u))))

        edges = [0.0, *cuts, 1.0]
        total = 0.0
        for lo, hi in zip(edges[:-1], edges[1:]):
            val, _ = integrate.quad(integrand, lo, hi, epsabs=0.0, epsrel=_QUAD_RTOL, limit=200)
            total += val
        return total


def _ladder_integral(func, knots, remainder) -> float:
    """Integrate a nonnegative ``func`` over [0, inf) piece by piece.

    Pieces follow a decade ladder merged with the distribution's knots; the
    loop stops once ``remainder(edge)`` (an upper bound on the rest of the
    integral) is negligible against the running total.
    """
    edges = sorted(set(_LADDER) | {float(k) for k in knots if k > 0})
    total = 0.0
    lo = 0.0
    for hi in edges:
        val, _ = integrate.quad(func, lo, hi, epsabs=0.0, epsrel=_QUAD_RTOL, limit=200)
        total += val
        lo = hi
        if hi >= 1.0 and total > 0.0 and remainder(hi) <= 1e-14 * total:
            return total
    return total


@dataclass(frozen=True)
class Exponential(ServiceDistribution):
    """Exponential law with the given rate."""

    rate: float = 1.0
    kind: ClassVar[str] = "exp"

    def __post_init__(self):
        if not self.rate > 0 or not math.isfinite(self.rate):
            raise DomainError(f"exponential rate must be positive, got {self.rate}")

    def _logpdf(self, x):
        return math.log(self.rate) - self.rate * x

    def _logsf(self, x):
        return -self.rate * x

    def _quantile(self, u):
        return -np.log1p(-u) / self.rate

    def mean(self):
        return 1.0 / self.rate

    def truncated_mean(self, c):
        c = float(_support(c))
        if math.isinf(c):
            return self.mean()
        return -math.expm1(-self.rate * c) / self.rate

    def laplace(self, s):
        s = self._check_transform_arg(s)
        return self.rate / (self.rate + s)

    def laplace_complement(self, s):
        s = self._check_transform_arg(s)
        return s / (self.rate + s)

    def spec(self):
        return f"exp:rate={self.rate!r}"


@dataclass(frozen=True)
class Pareto(ServiceDistribution):
    """Pareto law with density ``(alpha - 1) (1 + x)^-alpha`` on x >= 0.

    The survival function is ``(1 + x)^-(alpha - 1)``; the mean is finite only
    for ``alpha > 2``.  ``Pareto(4)`` has distribution function
    ``1 - (1 + x)^-3`` and mean 1/2.
    """

    alpha: float
    kind: ClassVar[str] = "pareto"

    def __post_init__(self):
        if not self.alpha > 1 or not math.isfinite(self.alpha):
            raise DomainError(f"Pareto alpha must exceed 1, got {self.alpha}")

    def _logpdf(self, x):
        return math.log(self.alpha - 1.0) - self.alpha * np.log1p(x)

    def _logsf(self, x):
        return -(self.alpha - 1.0) * np.log1p(x)

    def _quantile(self, u):
        return np.expm1(-np.log1p(-u) / (self.alpha - 1.0))

    def mean(self):
        if self.alpha <= 2.0:
            return math.inf
        return 1.0 / (self.alpha - 2.0)

    def truncated_mean(self, c):
        c = float(_support(c))
        if math.isinf(c):
            return self.mean()
        k = self.alpha - 2.0
        lc = math.log1p(c)
        if abs(k * lc) < 1e-8:
            # series of -expm1(-k L)/k around k = 0
            return lc * (1.0 - 0.5 * k * lc + (k * lc) ** 2 / 6.0)
        return -math.expm1(-k * lc) / k

    def knots(self):
        return (1.0,)

    def spec(self):
        return f"pareto:alpha={self.alpha!r}"


@dataclass(frozen=True)
class Weibull(ServiceDistribution):
    """Weibull law with survival function ``exp(-x^beta)``, ``0 < beta < 1``."""

    beta: float
    kind: ClassVar[str] = "weibull"

    def __post_init__(self):
        if not 0 < self.beta < 1:
            raise DomainError(f"Weibull beta must lie in (0, 1), got {self.beta}")

    def _logpdf(self, x):
        return math.log(self.beta) + (self.beta - 1.0) * np.log(x) - x**self.beta

    def _logsf(self, x):
        return -(x**self.beta)

    def _quantile(self, u):
        return (-np.log1p(-u)) ** (1.0 / self.beta)

    def mean(self):
        return math.gamma(1.0 + 1.0 / self.beta)

    def truncated_mean(self, c):
        c = float(_support(c))
        if math.isinf(c):
            return self.mean()
        return self.mean() * float(special.gammainc(1.0 / self.beta, c**self.beta))

    def knots(self):
        return (1.0,)

    def spec(self):
        return f"weibull:beta={self.beta!r}"


@dataclass(frozen=True)
class GammaDLR(ServiceDistribution):
    """Gamma law with density proportional to ``x^(shape-1) exp(-rate x)``.

    Only ``0 < shape <= 1`` gives a log-convex density.  Pass ``strict=False``
    to build a larger shape on purpose, e.g. as a negative control for
    :func:`check_log_convex`.
    """

    rate: float
    shape: float
    strict: bool = True
    kind: ClassVar[str] = "gamma"

    def __post_init__(self):
        if not self.rate > 0 or not self.shape > 0:
            raise DomainError("gamma rate and shape must be positive")
        if self.strict and self.shape > 1:
            raise DomainError(
                f"gamma shape {self.shape} > 1 has a log-concave density; "
                "pass strict=False to construct it anyway"
            )

    def _logpdf(self, x):
        k, r = self.shape, self.rate
        return k * math.log(r) - special.gammaln(k) + (k - 1.0) * np.log(x) - r * x

    def _logsf(self, x):
        return np.log(special.gammaincc(self.shape, self.rate * x))

    def _cdf(self, x):
        return special.gammainc(self.shape, self.rate * x)

    def _quantile(self, u):
        return special.gammaincinv(self.shape, u) / self.rate

    def mean(self):
        return self.shape / self.rate

    def truncated_mean(self, c):
        c = float(_support(c))
        if math.isinf(c):
            return self.mean()
        k, r = self.shape, self.rate
        upper = special.gammaincc(k, r * c)
        lower_next = special.gammainc(k + 1.0, r * c)
        return float(c * upper + (k / r) * lower_next)

    def laplace(self, s):
        s = self._check_transform_arg(s)
        return math.exp(-self.shape * math.log1p(s / self.rate))

    def laplace_complement(self, s):
        s = self._check_transform_arg(s)
        return -math.expm1(-self.shape * math.log1p(s / self.rate))

    def spec(self):
        return f"gamma:rate={self.rate!r},shape={self.shape!r}"


@dataclass(frozen=True)
class SplicedParetoExp(ServiceDistribution):
    """Density ``(1 + x)^-2`` up to ``a``, continued by an exponential tail.

    Beyond the splice point the density is ``(a + 1)^-2 exp(-(x - a)/(a + 1))``;
    it is continuous and log-convex with mean ``log(a + 1) + 1``.  Below ``a``
    its quantile coincides bit for bit with that of ``Pareto(2)``.
    """

    a: float
    kind: ClassVar[str] = "spliced"

    def __post_init__(self):
        if not self.a > 1 or not math.isfinite(self.a):
            raise DomainError(f"splice point must exceed 1, got {self.a}")

    @property
    def _log_a1(self) -> float:
        return math.log1p(self.a)

    def _logpdf(self, x):
        a, la1 = self.a, self._log_a1
        return np.where(x <= a, -2.0 * np.log1p(x), -2.0 * la1 - (x - a) / (a + 1.0))

    def _logsf(self, x):
        a, la1 = self.a, self._log_a1
        return np.where(x <= a, -np.log1p(x), -la1 - (x - a) / (a + 1.0))

    def _quantile(self, u):
        a, la1 = self.a, self._log_a1
        lq = np.log1p(-u)
        with np.errstate(over="ignore"):
            body = np.expm1(-lq / 1.0)
        tail = a - (a + 1.0) * (lq + la1)
        return np.where(lq >= -la1, body, tail)

    def mean(self):
        return self._log_a1 + 1.0

    def truncated_mean(self, c):
        c = float(_support(c))
        if math.isinf(c):
            return self.mean()
        if c <= self.a:
            return math.log1p(c)
        return self._log_a1 - math.expm1(-(c - self.a) / (self.a + 1.0))

    def knots(self):
        return (1.0, self.a)

    def spec(self):
        return f"spliced:a={self.a!r}"


def make_spliced(a: float) -> SplicedParetoExp:
    """Log-convex law equal to the ``(1 + x)^-2`` density up to ``a`` with finite mean."""
    return SplicedParetoExp(float(a))


@dataclass(frozen=True)
class LogConvexReport:
    passed: bool
    worst_violation: float
    skipped: tuple[float, ...] = ()


def check_log_convex(dist: ServiceDistribution, grid, tol: float = 1e-9) -> LogConvexReport:
    """Check discrete convexity of ``log pdf`` on consecutive grid triples.

    For each triple ``x0 < x1 < x2`` the interpolation weight
    ``w = (x2 - x1) / (x2 - x0)`` is used, so the test reduces to the midpoint
    form ``2 log f(x1) <= log f(x0) + log f(x2)`` on an equispaced grid.
    Points where the density is 0 or infinite are reported in ``skipped``.
    ``worst_violation`` is the largest ``log f(x1) - interpolant`` seen.
    """
    xs = np.asarray(grid, dtype=float)
    if xs.ndim != 1 or xs.size < 3:
        raise DomainError("grid needs at least three points")
    if np.any(xs <= 0) or np.any(np.diff(xs) <= 0):
        raise DomainError("grid must be strictly increasing and positive")

    logf = np.asarray(dist.logpdf(xs), dtype=float)
    finite = np.isfinite(logf)
    skipped = tuple(float(v) for v in xs[~finite])
    xs, logf = xs[finite], logf[finite]
    if xs.size < 3:
        return LogConvexReport(True, -math.inf, skipped)

    x0, x1, x2 = xs[:-2], xs[1:-1], xs[2:]
    w = (x2 - x1) / (x2 - x0)
    excess = logf[1:-1] - (w * logf[:-2] + (1.0 - w) * logf[2:])
    worst = float(np.max(excess))
    return LogConvexReport(worst <= tol, worst, skipped)


_SPEC_RE = re.compile(r"^\s*(\w+)\s*:\s*(.*?)\s*$")


def parse_dist(text: str) -> ServiceDistribution:
    """Parse ``exp:rate=2``, ``pareto:alpha=4``, ``weibull:beta=0.5``,
    ``gamma:rate=1,shape=0.5`` or ``spliced:a=1e40``."""
    match = _SPEC_RE.match(text)
    if not match:
        raise DomainError(f"cannot parse distribution {text!r}")
    name, body = match.group(1).lower(), match.group(2)
    params = {}
    for item in filter(None, (p.strip() for p in body.split(","))):
        key, sep, value = item.partition("=")
        if not sep:
            raise DomainError(f"expected key=value in {text!r}")
        try:
            params[key.strip()] = float(value)
        except ValueError:
            raise DomainError(f"bad number {value!r} in {text!r}") from None

    expected = {
        "exp": ({"rate"}, lambda p: Exponential(p["rate"])),
        "pareto": ({"alpha"}, lambda p: Pareto(p["alpha"])),
        "weibull": ({"beta"}, lambda p: Weibull(p["beta"])),
        "gamma": ({"rate", "shape"}, lambda p: GammaDLR(p["rate"], p["shape"])),
        "spliced": ({"a"}, lambda p: make_spliced(p["a"])),
    }
    if name not in expected:
        raise DomainError(f"unknown distribution kind {name!r}")
    keys, build = expected[name]
    if set(params) != keys:
        raise DomainError(f"{name} expects parameters {sorted(keys)}, got {sorted(params)}")
    return build(params)

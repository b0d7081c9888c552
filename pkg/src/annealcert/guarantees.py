"""Closed-form finite-time guarantees for the (J, delta) target family.

Target distributions have density proportional to ``(U + delta) ** J``.
The functions here convert between optimizer notions, bound the target
mass of the approximate domain optimizers, pick ``J`` and ``delta``, and
count iterations and samples. Exponentials of the form
``((1 + delta) / delta) ** J`` are handled in log space.
"""
from __future__ import annotations

import functools
import math
import sys
from dataclasses import dataclass
from decimal import Decimal, localcontext
from fractions import Fraction
from typing import NamedTuple, Optional

from .errors import PremiseError

FLOAT_MAX = sys.float_info.max
SATURATED = int(FLOAT_MAX)
_LOG_FLOAT_MAX = math.log(FLOAT_MAX)


def _logit(sigma: float) -> float:
    return math.log(sigma) - math.log1p(-sigma)


@dataclass(frozen=True)
class GuaranteeSpec:
    """Value imprecision, residual domain and confidence.

    ``rho`` and ``gamma`` are set together for the iteration bounds, with
    ``sigma == (1 + gamma) * rho``.
    """

    epsilon: float
    alpha: float
    sigma: float
    rho: Optional[float] = None
    gamma: Optional[float] = None

    def __post_init__(self):
        if not 0.0 < self.epsilon <= 1.0:
            raise PremiseError(f"epsilon must lie in (0, 1], got {self.epsilon}")
        if not 0.0 < self.alpha <= 1.0:
            raise PremiseError(f"alpha must lie in (0, 1], got {self.alpha}")
        if not 0.0 < self.sigma < 1.0:
            raise PremiseError(f"sigma must lie in (0, 1), got {self.sigma}")
        if (self.rho is None) != (self.gamma is None):
            raise PremiseError("rho and gamma must be given together")
        if self.rho is not None:
            check_rho_gamma(self.rho, self.gamma)
            if not math.isclose(self.sigma, (1.0 + self.gamma) * self.rho, rel_tol=1e-12):
                raise PremiseError("sigma must equal (1 + gamma) * rho")

    @classmethod
    def from_rho(cls, epsilon: float, alpha: float, rho: float,
                 gamma: Optional[float] = None) -> "GuaranteeSpec":
        """Split with the near-optimal ``gamma = (1 - rho) / (2 rho)`` by default."""
        if gamma is None:
            gamma = 0.5 * (1.0 - rho) / rho
        return cls(epsilon, alpha, (1.0 + gamma) * rho, rho, gamma)


def check_rho_gamma(rho: float, gamma: float) -> None:
    if not 0.0 < rho < 1.0:
        raise PremiseError(f"rho must lie in (0, 1), got {rho}")
    if not 0.0 < gamma < (1.0 - rho) / rho:
        raise PremiseError(f"gamma must lie in (0, (1 - rho) / rho), got {gamma}")


@dataclass(frozen=True)
class TargetParams:
    J: float
    delta: float

    def __post_init__(self):
        if not self.J >= 1:
            raise PremiseError(f"J must be >= 1, got {self.J}")
        if not self.delta > 0:
            raise PremiseError(f"delta must be > 0, got {self.delta}")


class IterationBound(NamedTuple):
    k: int
    saturated: bool = False


@dataclass(frozen=True)
class ScheduleCost:
    kind: str
    J: int
    iterations: int
    samples: int
    saturated: bool = False


# -- optimizer notions -------------------------------------------------------

def ball_depth(beta: float, n: int) -> float:
    """Radius of the n-ball of volume ``beta``."""
    if beta < 0:
        raise PremiseError("beta must be >= 0")
    if beta == 0:
        return 0.0
    log_c = (math.log(n / 2.0) + math.lgamma(n / 2.0)) / n
    return math.exp(log_c + math.log(beta) / n - 0.5 * math.log(math.pi))


def value_imprecision_from_domain(epsilon: float, alpha: float, L: float,
                                  domain_measure: float, n: int) -> float:
    """Imprecision of a domain optimizer read as a value optimizer."""
    return epsilon + L * ball_depth(alpha * domain_measure, n)


def alpha_for_value(epsilon: float, L: float, R: float, n: int) -> float:
    """Residual domain that turns a domain optimizer into a 2*epsilon value optimizer."""
    if epsilon <= 0 or L <= 0 or R <= 0:
        raise PremiseError("epsilon, L and R must be positive")
    return min(1.0, (epsilon / (L * R)) ** n)


# -- target mass and exponent ------------------------------------------------

def confidence_lower_bound(epsilon: float, alpha: float, target: TargetParams) -> float:
    """Lower bound on the target mass of the approximate domain optimizers."""
    J, d = target.J, target.delta
    bracket = (1.0 / alpha) * (1.0 + d) / (epsilon + d) - 1.0
    if bracket <= 0.0:
        return 1.0
    log_term = (J * (math.log1p(d) - math.log1p(epsilon + d))
                + math.log(bracket) + math.log1p(d) - math.log(d))
    if log_term > _LOG_FLOAT_MAX:
        return 0.0
    return 1.0 / (1.0 + math.exp(log_term))


def _j_rhs(epsilon: float, log_spread: float, sigma: float, delta: float) -> float:
    return ((1.0 + epsilon + delta) / epsilon) * (
        _logit(sigma) + log_spread + 2.0 * (math.log1p(delta) - math.log(delta)))


def j_bound(spec: GuaranteeSpec, delta: float) -> float:
    """Smallest real J putting target mass ``sigma`` on the domain optimizers."""
    if delta <= 0:
        raise PremiseError("delta must be > 0")
    return _j_rhs(spec.epsilon, -math.log(spec.alpha), spec.sigma, delta)


def j_bound_value(epsilon: float, sigma: float, delta: float, L: float, R: float,
                  n: int) -> float:
    """J for value imprecision 2*epsilon on a domain inside a ball of radius R.

    When ``L * R < epsilon`` the middle term is negative; this is allowed.
    """
    if not 0.0 < epsilon <= 1.0 or not 0.0 < sigma < 1.0 or delta <= 0:
        raise PremiseError("need epsilon in (0, 1], sigma in (0, 1), delta > 0")
    if L * R <= 0:
        raise PremiseError("L * R must be positive")
    return _j_rhs(epsilon, n * math.log(L * R / epsilon), sigma, delta)


def _delta_equation(delta: float, epsilon: float, half_c: float) -> float:
    return (math.log1p(delta) - math.log(delta) + half_c
            - (1.0 + epsilon + delta) / (delta * (1.0 + delta)))


def optimal_delta(spec: GuaranteeSpec) -> tuple[float, float]:
    """``(delta*, J*)`` minimising :func:`j_bound` over delta.

    Bisection (geometric midpoints) on the stationarity equation over
    ``[1e-8, 1e8]``; the root is unique for sigma in (0.5, 1).
    """
    if not 0.5 < spec.sigma < 1.0:
        raise PremiseError(f"optimal delta needs sigma in (0.5, 1), got {spec.sigma}")
    eps = spec.epsilon
    half_c = 0.5 * (_logit(spec.sigma) - math.log(spec.alpha))
    lo, hi = 1e-8, 1e8
    if _delta_equation(lo, eps, half_c) > 0 or _delta_equation(hi, eps, half_c) < 0:
        raise PremiseError("stationarity equation not bracketed in [1e-8, 1e8]")
    for _ in range(200):
        mid = math.sqrt(lo * hi)
        if mid in (lo, hi):
            break
        if _delta_equation(mid, eps, half_c) < 0:
            lo = mid
        else:
            hi = mid
    r_lo, r_hi = abs(_delta_equation(lo, eps, half_c)), abs(_delta_equation(hi, eps, half_c))
    delta = lo if r_lo <= r_hi else hi
    return delta, j_bound(spec, delta)


def sigma_for_j(J: float, epsilon: float, delta: float, L: float, R: float, n: int) -> float:
    """Confidence certified by :func:`j_bound_value` at a given J (its inverse in sigma)."""
    logit = (J * epsilon / (1.0 + epsilon + delta) - n * math.log(L * R / epsilon)
             - 2.0 * (math.log1p(delta) - math.log(delta)))
    if logit >= 0:
        return 1.0 / (1.0 + math.exp(-logit))
    e = math.exp(logit)
    return e / (1.0 + e)


# -- iteration counts ---------------------------------------------------------

def _ceil_positive(x: float) -> int:
    return max(0, math.ceil(x))


def iterations_flat_top(beta: float, rho: float, gamma: float) -> int:
    """Independence-sampler steps when the maximisers fill a fraction ``beta``."""
    if gamma * rho >= 1.0:
        raise PremiseError(f"gamma * rho must be < 1, got {gamma * rho}")
    check_rho_gamma(rho, gamma)
    if not 0.0 < beta < 1.0:
        raise PremiseError(f"beta must lie in (0, 1), got {beta}")
    return max(1, math.ceil(math.log(gamma * rho) / math.log1p(-beta)))


def iterations_uniform_general(target: TargetParams, rho: float, gamma: float) -> IterationBound:
    """Independence-sampler steps ``((1 + delta) / delta) ** J * log(1 / (gamma rho))``.

    Saturates at the largest float with ``saturated=True`` on overflow.
    ``gamma * rho == 1`` is accepted and gives zero.
    """
    if not 0.0 < rho < 1.0 or gamma <= 0:
        raise PremiseError("need rho in (0, 1) and gamma > 0")
    gr = gamma * rho
    if gr > 1.0:
        raise PremiseError(f"gamma * rho must be <= 1, got {gr}")
    tail = -math.log(gr)
    if tail == 0.0:
        return IterationBound(0)
    log_base = math.log1p(target.delta) - math.log(target.delta)
    log_k = target.J * log_base + math.log(tail)
    if log_k >= _LOG_FLOAT_MAX:
        return IterationBound(SATURATED, True)
    return IterationBound(_ceil_positive(((1.0 + target.delta) / target.delta) ** target.J * tail))


def density_ratio_bound(J: float, J_hat: float, delta: float) -> float:
    """``((1 + delta) / delta) ** (J - J_hat)``; the uniform-proposal M when ``J_hat = 0``."""
    if not J >= J_hat >= 0 or delta <= 0:
        raise PremiseError("need J >= J_hat >= 0 and delta > 0")
    log_r = (J - J_hat) * (math.log1p(delta) - math.log(delta))
    if log_r >= _LOG_FLOAT_MAX:
        return FLOAT_MAX
    return math.exp(log_r)


# -- cooling schedules ---------------------------------------------------------

def _floor_exp(i: int) -> int:
    """Exact floor of e**i."""
    with localcontext() as ctx:
        ctx.prec = int(i * 0.4343) + 30
        return int(Decimal(i).exp().to_integral_value(rounding="ROUND_FLOOR"))


def _iroot(i: int, r: int) -> int:
    """floor(i ** (1/r)) for integers ``i >= 0``."""
    if i < 2 or r == 1:
        return i
    if r == 2:
        return math.isqrt(i)
    x = int(math.exp(math.log(i) / r))
    while x ** r > i:
        x -= 1
    while (x + 1) ** r <= i:
        x += 1
    return x


def power_floor(p: float):
    """Return ``F(i) = floor(i ** p)`` exact for integer ``i >= 0``.

    An exponent within 1e-12 of a rational n/d with d <= 64 is treated as
    exactly n/d and evaluated as an integer d-th root of i**n. Other
    exponents fall back to a 60-digit check near integers.
    """
    frac = Fraction(p).limit_denominator(64)
    if frac > 0 and abs(float(frac) - p) <= 1e-12 * max(1.0, abs(p)):
        num, den = frac.numerator, frac.denominator
        if den == 1:
            return lambda i: i ** num
        return lambda i: _iroot(i ** num, den)

    def floor_pow(i: int) -> int:
        y = float(i) ** p
        r = round(y)
        if abs(y - r) > 1e-9 * max(1.0, y):
            return math.floor(y)
        with localcontext() as ctx:
            ctx.prec = 60
            return int((Decimal(i) ** Decimal(p)).to_integral_value(rounding="ROUND_FLOOR"))

    return floor_pow


def schedule_level_count(kind: str, i: int, a: float = 1.0) -> int:
    """Number of steps spent at exponent ``i`` (the counts K_i)."""
    if kind == "logarithmic":
        return _floor_exp(i) - _floor_exp(i - 1)
    if kind == "algebraic":
        F = power_floor(1.0 / a)
        return F(i + 1) - F(i)
    raise ValueError(f"unknown schedule kind {kind!r}")


@functools.lru_cache(maxsize=None)
def _bernoulli_plus(m: int) -> tuple[Fraction, ...]:
    """B_0..B_m with the B_1 = +1/2 convention."""
    B = [Fraction(1)]
    for k in range(1, m + 1):
        B.append(1 - sum(math.comb(k, j) * B[j] / (k - j + 1) for j in range(k)))
    return tuple(B)


def _power_sum(p: int, N: int) -> int:
    """sum_{i=1}^N i**p by Faulhaber's formula."""
    B = _bernoulli_plus(p)
    total = sum(math.comb(p + 1, j) * B[j] * N ** (p + 1 - j) for j in range(p + 1))
    return int(total / (p + 1))


def _as_int(x: float) -> Optional[int]:
    r = round(x)
    return int(r) if r >= 1 and abs(x - r) <= 1e-12 * max(1.0, x) else None


def _power_floor_sum(p: float, a: float, N: int, F) -> int:
    """sum_{i=1}^N floor(i**p), exactly."""
    q = _as_int(p)
    if q is not None:
        return _power_sum(q, N)
    r = _as_int(a)
    if r is not None:
        # floor(i**(1/r)) >= m  iff  i >= m**r
        top = F(N)
        return top * (N + 1) - _power_sum(r, top)
    return sum(map(F, range(1, N + 1)))


def schedule_cost(kind: str, J: int, a: float = 1.0) -> ScheduleCost:
    """Iterations and Algorithm-II samples to climb a schedule up to ``J``.

    Iterations telescope to ``floor(e**J) - 1`` (logarithmic) or
    ``floor((J + 1)**(1/a)) - 1`` (algebraic); samples use summation by
    parts, ``J * F(J + 1) - sum_{i<=J} F(i)``.
    """
    J = int(J)
    if J < 1:
        raise PremiseError("J must be >= 1")
    if kind == "logarithmic":
        if J >= _LOG_FLOAT_MAX:
            return ScheduleCost(kind, J, SATURATED, SATURATED, True)
        F = _floor_exp
        top = F(J)
        partial = sum(F(i) for i in range(0, J))
        iterations = top - F(0)
        samples = J * top - partial
        return ScheduleCost(kind, J, iterations, samples)
    if kind == "algebraic":
        if a <= 0:
            raise PremiseError("algebraic schedule needs a > 0")
        p = 1.0 / a
        if p * math.log(J + 1) >= _LOG_FLOAT_MAX:
            return ScheduleCost(kind, J, SATURATED, SATURATED, True)
        F = power_floor(p)
        top = F(J + 1)
        return ScheduleCost(kind, J, top - 1, J * top - _power_floor_sum(p, a, J, F))
    raise ValueError(f"unknown schedule kind {kind!r}")


# -- competitor sample counts ----------------------------------------------

def vidyasagar_bounds(epsilon: float, alpha: float, rho: float) -> tuple[int, int]:
    """Search points N and noise samples M for the randomized domain optimizer."""
    if epsilon <= 0 or not 0.0 < alpha < 1.0 or not 0.0 < rho < 1.0:
        raise PremiseError("need epsilon > 0, alpha in (0, 1), rho in (0, 1)")
    N = math.ceil(math.log(2.0 / (1.0 - rho)) / -math.log1p(-alpha))
    M = math.ceil(math.log(4.0 * N / (1.0 - rho)) / (2.0 * epsilon ** 2))
    return N, M


def vidyasagar_value_bounds(epsilon: float, rho: float, L: float, R: float,
                            n: int) -> tuple[int, int]:
    """Vidyasagar's counts for a 2*epsilon value optimizer (N grows like (LR/eps)^n)."""
    if epsilon <= 0 or not 0.0 < rho < 1.0 or L * R <= 0:
        raise PremiseError("need epsilon > 0, rho in (0, 1), L * R > 0")
    log_two = math.log(2.0 / (1.0 - rho))
    if log_two <= 1.0:
        raise PremiseError("log(2 / (1 - rho)) must exceed 1 for the log-log term")
    ratio = math.log(L * R / epsilon)
    N = math.ceil(math.exp(n * ratio) * log_two)
    M = math.ceil((math.log(4.0 / (1.0 - rho)) + math.log(log_two) + n * ratio)
                  / (2.0 * epsilon ** 2))
    return N, M


def log_inequality_check(x: float, y: float) -> bool:
    """``log((x + y) / y) >= x / (x + y)`` for x > 0, y > 1."""
    if x <= 0 or y <= 1:
        raise PremiseError("need x > 0 and y > 1")
    return math.log1p(x / y) >= x / (x + y)


GROWTH_RATES = (
    # (method, epsilon, rho or sigma, LR, n, problem)
    ("Shapiro", "1/eps^2 log(1/eps)", "log(1/(1-rho))", "(LR)^2 log LR", "n", "convex"),
    ("Nesterov", "1/eps^4", "log(1/(1-rho))", "(LR)^2", "-", "convex"),
    ("Vidyasagar", "1/eps^2 log(1/eps)", "log(1/(1-rho))", "log LR", "n", "general"),
    ("MCMC [per iteration]", "1/eps log(1/eps)", "log(1/(1-sigma))", "log LR", "n", "general"),
)

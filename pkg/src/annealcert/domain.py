"""Domains, bounded criteria and the built-in test problems.

Every criterion maps points of an axis-aligned box to values in [0, 1].
Criteria are evaluated in batches: the wrapped function receives an
``(m, n)`` array of points and returns ``m`` values.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.optimize import minimize

from .errors import AssumptionViolation, ConfigError, DomainViolation, NumericError

BatchFn = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class Domain:
    """Axis-aligned box ``[lower, upper]`` in n dimensions."""

    lower: tuple[float, ...]
    upper: tuple[float, ...]

    def __post_init__(self):
        lo = tuple(float(v) for v in np.atleast_1d(self.lower))
        hi = tuple(float(v) for v in np.atleast_1d(self.upper))
        if len(lo) != len(hi) or not lo:
            raise ValueError("lower and upper must have the same nonzero length")
        for i, (a, b) in enumerate(zip(lo, hi)):
            if not (math.isfinite(a) and math.isfinite(b) and a < b):
                raise ValueError(f"degenerate axis {i}: [{a}, {b}]")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def n(self) -> int:
        return len(self.lower)

    @property
    def lo(self) -> np.ndarray:
        return np.array(self.lower)

    @property
    def hi(self) -> np.ndarray:
        return np.array(self.upper)

    def measure(self) -> float:
        return float(math.prod(b - a for a, b in zip(self.lower, self.upper)))

    def enclosing_radius(self) -> float:
        return 0.5 * float(np.linalg.norm(self.hi - self.lo))

    def center(self) -> np.ndarray:
        return 0.5 * (self.lo + self.hi)

    def contains(self, theta) -> bool:
        theta = np.asarray(theta, dtype=float)
        return bool(np.all(theta >= self.lo) and np.all(theta <= self.hi))

    def grid(self, points: int) -> np.ndarray:
        """Inclusive regular grid, row-major, shape ``(points**n, n)``."""
        if points < 2:
            raise ValueError("points-per-axis must be >= 2")
        axes = [np.linspace(a, b, points) for a, b in zip(self.lower, self.upper)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)


def _as_batch(theta, n: int) -> tuple[np.ndarray, bool]:
    arr = np.asarray(theta, dtype=float)
    single = arr.ndim <= 1
    if n == 1 and arr.ndim == 1 and arr.shape[0] != 1:
        # a 1-D vector of scalars on a 1-D domain is a batch
        return arr.reshape(-1, 1), False
    return arr.reshape(-1, n), single


@dataclass(frozen=True)
class Criterion:
    """Objective with values in [0, 1] on ``domain``.

    ``func`` is the batch evaluator. Out-of-range values raise
    :class:`AssumptionViolation` rather than being clamped.
    """

    func: BatchFn
    domain: Domain
    name: str = "criterion"
    lipschitz: Optional[float] = None
    scale: Optional["ScaleRecord"] = None

    def values(self, points: np.ndarray) -> np.ndarray:
        """Evaluate a batch ``(m, n)`` and check Assumption 1."""
        points = np.asarray(points, dtype=float).reshape(-1, self.domain.n)
        out = np.asarray(self.func(points), dtype=float).reshape(-1)
        bad = ~((out >= 0.0) & (out <= 1.0))
        if bad.any():
            i = int(np.flatnonzero(bad)[0])
            raise AssumptionViolation(
                f"{self.name}: value {out[i]!r} outside [0, 1] at {points[i].tolist()}"
            )
        return out

    def __call__(self, theta):
        batch, single = _as_batch(theta, self.domain.n)
        out = self.values(batch)
        return float(out[0]) if single else out


@dataclass(frozen=True)
class ScaleRecord:
    lower: float
    upper: float

    @property
    def factor(self) -> float:
        return self.upper - self.lower

    def apply(self, raw):
        return (np.asarray(raw, dtype=float) - self.lower) / self.factor

    def raw_epsilon(self, epsilon_scaled: float) -> float:
        return epsilon_scaled * self.factor


def scale_criterion(raw: BatchFn, domain: Domain, lower: float, upper: float,
                    name: str = "scaled") -> tuple[Criterion, ScaleRecord]:
    """Affinely map a criterion bounded in ``[lower, upper]`` onto [0, 1]."""
    if not lower < upper:
        raise ValueError("scale_criterion needs lower < upper")
    record = ScaleRecord(float(lower), float(upper))

    def scaled(points):
        r = np.asarray(raw(points), dtype=float).reshape(-1)
        bad = ~((r >= record.lower) & (r <= record.upper))
        if bad.any():
            i = int(np.flatnonzero(bad)[0])
            raise DomainViolation(
                f"raw value {r[i]!r} outside [{record.lower}, {record.upper}] "
                f"at {np.asarray(points)[i].tolist()}"
            )
        return record.apply(r)

    return Criterion(scaled, domain, name=name, scale=record), record


def grid_scalars(criterion, domain: Domain, points: int) -> tuple[float, float]:
    """Grid maximum and grid Lipschitz estimate of ``criterion``.

    ``criterion`` is a :class:`Criterion` or any batch function. The
    Lipschitz estimate is the largest Euclidean norm of the forward
    difference gradient, built from axis-adjacent node pairs.
    """
    nodes = domain.grid(points)
    evaluate = criterion.values if isinstance(criterion, Criterion) else criterion
    vals = np.asarray(evaluate(nodes), dtype=float).reshape(-1)
    finite = np.isfinite(vals)
    if not finite.all():
        i = int(np.flatnonzero(~finite)[0])
        raise NumericError(f"non-finite value {vals[i]!r} at grid point {nodes[i].tolist()}")

    n = domain.n
    cube = vals.reshape((points,) * n)
    steps = (domain.hi - domain.lo) / (points - 1)
    trim = tuple(slice(0, points - 1) for _ in range(n))
    sq = np.zeros((points - 1,) * n)
    for axis in range(n):
        d = np.diff(cube, axis=axis) / steps[axis]
        sq += d[trim] ** 2
    return float(vals.max()), float(np.sqrt(sq.max()))


@dataclass(frozen=True)
class NoisyCriterion:
    """Criterion observed through samples ``g(x, theta)``, ``x ~ N(0, noise_std**2)``.

    ``response(x, theta)`` takes draws of shape ``(m, k)`` and points of
    shape ``(m, n)`` and returns ``(m, k)`` samples. ``mean`` is the
    criterion ``E[g(x, theta)]`` when it is known.
    """

    response: Callable[[np.ndarray, np.ndarray], np.ndarray]
    mean: Criterion
    noise_std: float
    name: str = "noisy"

    @property
    def domain(self) -> Domain:
        return self.mean.domain

    def draw(self, rng: np.random.Generator, size) -> np.ndarray:
        # one stream value per sample, zero-variance included
        return rng.normal(0.0, self.noise_std, size=size)

    def sample(self, theta, rng: np.random.Generator, count: int = 1) -> np.ndarray:
        theta = np.asarray(theta, dtype=float).reshape(1, self.domain.n)
        x = self.draw(rng, (1, count))
        return self.response(x, theta)[0]


def multiplicative_noise(mean: Criterion, noise_std: float, name: str = "noisy") -> NoisyCriterion:
    """``g(x, theta) = (1 + x) U(theta)``."""

    def response(x, theta):
        return (1.0 + x) * mean.values(theta)[:, None]

    return NoisyCriterion(response, mean, float(noise_std), name=name)


# -- test problems ---------------------------------------------------------

PEAKS_DOMAIN = Domain((-3.0, -3.0), (3.0, 3.0))
PEAKS_GRID = 601


def peaks_raw(points: np.ndarray) -> np.ndarray:
    """Matlab ``peaks`` surface V on a batch of 2-D points."""
    points = np.asarray(points, dtype=float).reshape(-1, 2)
    a, b = points[:, 0], points[:, 1]
    return (3.0 * (1.0 - a) ** 2 * np.exp(-a ** 2 - (b + 1.0) ** 2)
            - 10.0 * (a / 5.0 - a ** 3 - b ** 5) * np.exp(-a ** 2 - b ** 2)
            - np.exp(-(a + 1.0) ** 2 - b ** 2) / 3.0)


def _abs_peaks(points):
    return np.abs(peaks_raw(points))


@functools.lru_cache(maxsize=None)
def peaks_scale(points: int = PEAKS_GRID) -> tuple[float, float]:
    """(grid max of |V|, polished continuous max of |V|)."""
    nodes = PEAKS_DOMAIN.grid(points)
    vals = _abs_peaks(nodes)
    start = nodes[int(np.argmax(vals))]
    res = minimize(lambda t: -_abs_peaks(t)[0], start, method="L-BFGS-B",
                   bounds=list(zip(PEAKS_DOMAIN.lower, PEAKS_DOMAIN.upper)),
                   options={"ftol": 1e-15, "gtol": 1e-12})
    return float(vals.max()), max(float(vals.max()), float(-res.fun))


@functools.lru_cache(maxsize=None)
def peaks_criterion(points: int = PEAKS_GRID) -> Criterion:
    """U = |V| / max|V| on [-3, 3]^2, with grid Lipschitz estimate attached."""
    _, vmax = peaks_scale(points)

    def func(p):
        return _abs_peaks(p) / vmax

    base = Criterion(func, PEAKS_DOMAIN, name="peaks", scale=ScaleRecord(0.0, vmax))
    _, lip = grid_scalars(base, PEAKS_DOMAIN, points)
    return Criterion(func, PEAKS_DOMAIN, name="peaks", lipschitz=lip,
                     scale=ScaleRecord(0.0, vmax))


def peaks_noisy(points: int = PEAKS_GRID) -> NoisyCriterion:
    """Peaks observed through ``(1 + x) U`` with ``x ~ N(0, 0.25)``."""
    return multiplicative_noise(peaks_criterion(points), 0.5, name="peaks-noisy")


def step_criterion(cut: float = 0.1, high: float = 1.0, low: float = 0.4,
                   closed: bool = True, name: str = "step1d") -> Criterion:
    """U = high on [0, cut] (or [0, cut) if not closed), low elsewhere, on [0, 1]."""

    def func(p):
        t = np.asarray(p, dtype=float)[:, 0]
        inside = t <= cut if closed else t < cut
        return np.where(inside, high, low)

    return Criterion(func, Domain((0.0,), (1.0,)), name=name)


def step1d() -> Criterion:
    return step_criterion()


PROBLEMS: dict[str, Callable[[], object]] = {
    "peaks": peaks_criterion,
    "peaks-noisy": peaks_noisy,
    "step1d": step1d,
}


def get_problem(name: str):
    try:
        return PROBLEMS[name]()
    except KeyError:
        raise ConfigError(f"unknown problem {name!r}; known: {sorted(PROBLEMS)}") from None

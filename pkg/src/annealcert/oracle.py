"""Brute-force grid checks: set measures, target probabilities, optimizer membership.

A :class:`GridField` holds criterion values on the inclusive regular grid.
All nodes carry the same weight ``measure / size``, so set measures are
node counts scaled by the domain measure and target probabilities are
ratios of weight sums (taken with log-sum-exp).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy.special import logsumexp

from .domain import Criterion, Domain
from .guarantees import TargetParams, confidence_lower_bound


@dataclass(frozen=True)
class GridField:
    criterion: Criterion
    points: int
    values: np.ndarray

    @classmethod
    def build(cls, criterion: Criterion, points: int) -> "GridField":
        values = criterion.values(criterion.domain.grid(points))
        values.setflags(write=False)
        return cls(criterion, points, values)

    @property
    def domain(self) -> Domain:
        return self.criterion.domain

    @property
    def size(self) -> int:
        return self.values.size

    @property
    def max(self) -> float:
        return float(self.values.max())

    def nodes(self) -> np.ndarray:
        return self.domain.grid(self.points)

    def tolerance(self) -> float:
        """Relative measure slack: a step edge moves by at most one cell per axis."""
        return self.domain.n / self.points

    def _sorted(self) -> np.ndarray:
        cached = self.__dict__.get("_sorted_values")
        if cached is None:
            cached = np.sort(self.values)
            object.__setattr__(self, "_sorted_values", cached)
        return cached

    def count_above(self, thresholds) -> np.ndarray:
        s = self._sorted()
        return s.size - np.searchsorted(s, thresholds, side="right")


Subset = Union[np.ndarray, Callable[[np.ndarray, np.ndarray], np.ndarray], None]


def measure_above(field: GridField, threshold: float) -> float:
    """Grid estimate of the measure of {U > threshold}."""
    return float(field.count_above(threshold)) / field.size * field.domain.measure()


def _mask(field: GridField, subset: Subset) -> np.ndarray:
    if subset is None:
        return np.ones(field.size, dtype=bool)
    if callable(subset):
        return np.asarray(subset(field.nodes(), field.values), dtype=bool)
    return np.asarray(subset, dtype=bool)


def log_weights(field: GridField, J: float, delta: float) -> np.ndarray:
    return J * np.log(field.values + delta)


def target_probability(field: GridField, subset: Subset, target) -> float:
    """Target mass of ``subset`` (mask over nodes or ``f(nodes, values)``).

    ``target`` is a :class:`TargetParams` or a ``(J, delta)`` pair; J = 0
    is allowed and gives the uniform distribution.
    """
    J, delta = (target.J, target.delta) if isinstance(target, TargetParams) else target
    if delta <= 0:
        raise ValueError("delta must be > 0")
    mask = _mask(field, subset)
    if not mask.any():
        return 0.0
    lw = log_weights(field, J, delta)
    return float(math.exp(logsumexp(lw[mask]) - logsumexp(lw)))


def domain_optimizer_mask(field: GridField, epsilon: float, alpha: float) -> np.ndarray:
    """Nodes that are approximate domain optimizers on the grid."""
    limit = alpha * field.size
    return field.count_above(field.values + epsilon) <= limit


def value_optimizer_mask(field: GridField, epsilon: float) -> np.ndarray:
    return field.values + epsilon >= field.max


def is_domain_optimizer(field: GridField, theta, epsilon: float, alpha: float) -> bool:
    u = field.criterion(theta)
    return measure_above(field, u + epsilon) <= alpha * field.domain.measure()


def is_value_optimizer(field: GridField, theta, epsilon: float) -> bool:
    return field.max <= field.criterion(theta) + epsilon


def estimate_M(field: GridField, target) -> float:
    """Uniform-proposal constant: measure times the peak target density."""
    J, delta = (target.J, target.delta) if isinstance(target, TargetParams) else target
    lw = log_weights(field, J, delta)
    return float(math.exp(lw.max() - logsumexp(lw) + math.log(field.size)))


@dataclass(frozen=True)
class SweepEntry:
    epsilon: float
    alpha: float
    J: float
    delta: float
    oracle: float
    bound: float
    tolerance: float

    @property
    def slack(self) -> float:
        return self.oracle - self.bound

    @property
    def passed(self) -> bool:
        return self.oracle + self.tolerance >= self.bound

    def as_dict(self) -> dict:
        return {
            "spec": {"epsilon": self.epsilon, "alpha": self.alpha, "J": self.J, "delta": self.delta},
            "oracle": self.oracle,
            "bound": self.bound,
            "slack": self.slack,
            "pass": self.passed,
        }


def theorem2_sweep(field: GridField, specs: Sequence[tuple[float, float, float, float]]
                   ) -> list[SweepEntry]:
    """Compare grid target mass of the domain optimizers against the closed-form bound."""
    out = []
    for epsilon, alpha, J, delta in specs:
        target = TargetParams(J, delta)
        mask = domain_optimizer_mask(field, epsilon, alpha)
        oracle = target_probability(field, mask, target)
        bound = confidence_lower_bound(epsilon, alpha, target)
        out.append(SweepEntry(epsilon, alpha, J, delta, oracle, bound, field.tolerance()))
    return out


def sweep_grid(epsilons, alphas, Js, delta: float) -> list[tuple[float, float, float, float]]:
    return [(e, a, J, delta) for e in epsilons for a in alphas for J in Js]

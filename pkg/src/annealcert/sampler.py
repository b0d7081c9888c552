"""Metropolis-Hastings kernels with invariant law proportional to (U + delta)**J.

Algorithm ``"I"`` evaluates a deterministic criterion. Algorithm ``"II"``
only sees noisy samples: each proposal gets J fresh draws, and the
current state keeps the draws it was accepted with. Factors enter as
``|g + delta|``, so the augmented chain is exact with theta-marginal
proportional to ``E|g + delta| ** J``; this equals ``(U + delta) ** J``
whenever ``g + delta`` cannot go negative. Flooring negative factors at
zero instead rejects almost every proposal once J is in the hundreds.

Every chain owns three independent streams spawned from its seed: one for
proposals (the initial state is its first draw), one for noise and one
for the accept/reject uniforms. One uniform is consumed per step whatever
the outcome, so replays are exact.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterator, Optional, Union

import numpy as np

from .domain import Criterion, Domain, NoisyCriterion
from .guarantees import TargetParams

ALGORITHMS = ("I", "II")
_CHUNK = 1024
_U64 = (1 << 64) - 1


@dataclass(frozen=True)
class Proposal:
    """Independent uniform proposal, or Gaussian random walk with per-axis steps.

    Both are symmetric in the acceptance ratio. Random-walk moves that
    leave the domain are rejected in place.
    """

    kind: str = "uniform"
    step: Optional[tuple[float, ...]] = None

    def __post_init__(self):
        if self.kind not in ("uniform", "random-walk"):
            raise ValueError(f"unknown proposal kind {self.kind!r}")
        if self.kind == "random-walk":
            if self.step is None:
                raise ValueError("random-walk proposal needs step sizes")
            object.__setattr__(self, "step", tuple(float(s) for s in np.atleast_1d(self.step)))

    @classmethod
    def uniform(cls) -> "Proposal":
        return cls("uniform")

    @classmethod
    def random_walk(cls, step) -> "Proposal":
        return cls("random-walk", step)

    @property
    def independent(self) -> bool:
        return self.kind == "uniform"

    def draw(self, theta: np.ndarray, domain: Domain, rng: np.random.Generator) -> np.ndarray:
        if self.kind == "uniform":
            return rng.uniform(domain.lo, domain.hi)
        return theta + np.array(self.step) * rng.standard_normal(domain.n)

    def log_density_ratio(self, current: np.ndarray, proposed: np.ndarray) -> float:
        """log q(current | proposed) - log q(proposed | current)."""
        return 0.0


@dataclass(frozen=True)
class CoolingSchedule:
    """Exponent sequence J_k, k >= 1, never above ``cap``."""

    kind: str
    cap: int
    a: float = 1.0

    def __post_init__(self):
        if self.kind not in ("constant", "logarithmic", "algebraic"):
            raise ValueError(f"unknown schedule kind {self.kind!r}")
        if self.cap < 1:
            raise ValueError("schedule cap must be >= 1")
        if self.kind == "algebraic" and self.a <= 0:
            raise ValueError("algebraic schedule needs a > 0")

    @classmethod
    def constant(cls, J: int) -> "CoolingSchedule":
        return cls("constant", J)

    def exponent(self, k: int) -> int:
        if self.kind == "constant":
            return self.cap
        if self.kind == "logarithmic":
            j = math.floor(math.log(k)) + 1
        else:
            j = math.floor(k ** self.a)
        return max(1, min(self.cap, j))


class ChainStreams:
    """The proposal, noise and accept streams of one chain."""

    def __init__(self, seed: int):
        self.seed = int(seed) & _U64
        children = np.random.SeedSequence(self.seed).spawn(3)
        self.proposal, self.noise, self.accept = (np.random.Generator(np.random.PCG64(c))
                                                  for c in children)


@dataclass(frozen=True)
class ChainState:
    """Current point and its log score.

    For Algorithm I ``level`` is log(U(theta) + delta) and ``score`` is
    ``J * level``. For Algorithm II ``draws`` holds the per-draw
    log|g + delta| values retained with the state and ``score`` is their
    sum.
    """

    theta: np.ndarray
    score: float
    step: int = 0
    accepted: bool = False
    level: Optional[float] = None
    draws: Optional[np.ndarray] = None


@dataclass
class ChainRun:
    seed: int
    algorithm: str
    start: np.ndarray
    thetas: np.ndarray
    accepted: np.ndarray

    @property
    def steps(self) -> int:
        return len(self.accepted)

    @property
    def acceptance_count(self) -> int:
        return int(self.accepted.sum())

    @property
    def final(self) -> np.ndarray:
        return self.thetas[-1]

    def trajectory(self) -> Iterator[tuple[int, np.ndarray, bool]]:
        for k in range(self.steps):
            yield k + 1, self.thetas[k], bool(self.accepted[k])


Problem = Union[Criterion, NoisyCriterion]


def _draw_scores(noisy: NoisyCriterion, theta: np.ndarray, delta: float,
                 rng: np.random.Generator, count: int) -> np.ndarray:
    """log|g + delta| for ``count`` fresh draws at each row of ``theta``."""
    x = noisy.draw(rng, (theta.shape[0], count))
    g = noisy.response(x, theta) + delta
    with np.errstate(divide="ignore"):
        return np.log(np.abs(g))


def _decide(proposed: float, current: float, log_q: float, u: float) -> bool:
    # a zero proposal product is rejected; a zero current product is left unconditionally
    if proposed == -math.inf:
        return False
    if current == -math.inf:
        return True
    log_ratio = proposed - current + log_q
    return log_ratio >= 0.0 or u < math.exp(log_ratio)


def _integer_J(J) -> int:
    if int(J) != J:
        raise ValueError(f"Algorithm II needs an integer J, got {J}")
    return int(J)


def initial_state(algorithm: str, problem: Problem, J, delta: float,
                  streams: ChainStreams) -> ChainState:
    domain = problem.domain
    theta = streams.proposal.uniform(domain.lo, domain.hi)
    if algorithm == "I":
        level = float(np.log(problem.values(theta[None, :]) + delta)[0])
        return ChainState(theta, J * level, level=level)
    draws = _draw_scores(problem, theta[None, :], delta, streams.noise, _integer_J(J))[0]
    return ChainState(theta, float(draws.sum()), draws=draws)


def mh_step_deterministic(state: ChainState, criterion: Criterion, target: TargetParams,
                          proposal: Proposal, streams: ChainStreams) -> ChainState:
    """One Algorithm I transition at exponent ``target.J``."""
    J, delta = target.J, target.delta
    domain = criterion.domain
    current = J * state.level
    prop = proposal.draw(state.theta, domain, streams.proposal)
    u = streams.accept.random()
    step = state.step + 1
    if domain.contains(prop):
        level = float(np.log(criterion.values(prop[None, :]) + delta)[0])
        score = J * level
        if _decide(score, current, proposal.log_density_ratio(state.theta, prop), u):
            return ChainState(prop, score, step, True, level=level)
    return ChainState(state.theta, current, step, False, level=state.level)


def mh_step_expected(state: ChainState, noisy: NoisyCriterion, target: TargetParams,
                     proposal: Proposal, streams: ChainStreams) -> ChainState:
    """One Algorithm II transition with J noisy draws at the proposal.

    If J grew since the state was accepted (cooling), the state's
    retained draws are topped up with fresh draws at its own point first.
    """
    J, delta = _integer_J(target.J), target.delta
    domain = noisy.domain
    draws = state.draws
    if len(draws) < J:
        extra = _draw_scores(noisy, state.theta[None, :], delta, streams.noise, J - len(draws))[0]
        draws = np.concatenate([draws, extra])
    current = float(draws.sum())
    prop = proposal.draw(state.theta, domain, streams.proposal)
    u = streams.accept.random()
    step = state.step + 1
    if domain.contains(prop):
        fresh = _draw_scores(noisy, prop[None, :], delta, streams.noise, J)[0]
        score = float(fresh.sum())
        if _decide(score, current, proposal.log_density_ratio(state.theta, prop), u):
            return ChainState(prop, score, step, True, draws=fresh)
    return ChainState(state.theta, current, step, False, draws=draws)


def _run_stepwise(algorithm, problem, target, proposal, schedule, steps, streams):
    state = initial_state(algorithm, problem, schedule.exponent(1), target.delta, streams)
    start = state.theta
    step_fn = mh_step_deterministic if algorithm == "I" else mh_step_expected
    thetas = np.empty((steps, problem.domain.n))
    accepted = np.empty(steps, dtype=bool)
    for k in range(steps):
        t = TargetParams(schedule.exponent(k + 1), target.delta)
        state = step_fn(state, problem, t, proposal, streams)
        thetas[k] = state.theta
        accepted[k] = state.accepted
    return start, thetas, accepted


def _run_independent(algorithm, problem, J, delta, steps, streams):
    """Constant-J uniform-proposal chain with proposals scored in blocks.

    Consumes the streams in the same order as the stepwise kernels and
    reproduces them exactly.
    """
    state = initial_state(algorithm, problem, J, delta, streams)
    domain = problem.domain
    proposals = streams.proposal.uniform(domain.lo, domain.hi, size=(steps, domain.n))
    uniforms = streams.accept.random(steps).tolist()
    if algorithm == "I":
        levels = np.log(problem.values(proposals) + delta)
        scores = (J * levels).tolist()
    else:
        J = _integer_J(J)
        scores = []
        for lo in range(0, steps, _CHUNK):
            block = proposals[lo:lo + _CHUNK]
            scores.extend(_draw_scores(problem, block, delta, streams.noise, J)
                          .sum(axis=1).tolist())

    index = np.empty(steps, dtype=np.int64)
    accepted = np.zeros(steps, dtype=bool)
    current, at = state.score, -1
    for k in range(steps):
        if _decide(scores[k], current, 0.0, uniforms[k]):
            current, at = scores[k], k
            accepted[k] = True
        index[k] = at
    thetas = np.where((index < 0)[:, None], state.theta[None, :], proposals[np.maximum(index, 0)])
    return state.theta, thetas, accepted


def run_chain(algorithm: str, problem: Problem, target: TargetParams,
              proposal: Proposal = Proposal(), steps: int = 1000, seed: int = 0,
              schedule: Optional[CoolingSchedule] = None, stepwise: bool = False) -> ChainRun:
    """Run ``steps`` transitions from a uniform starting point.

    Without a schedule the exponent is ``target.J`` throughout. Setting
    ``stepwise`` forces the per-step kernels even where the block path
    applies; both give identical runs.
    """
    if algorithm not in ALGORITHMS:
        raise ValueError(f"algorithm must be one of {ALGORITHMS}, got {algorithm!r}")
    if steps < 1:
        raise ValueError("steps must be >= 1")
    if algorithm == "I" and not isinstance(problem, Criterion):
        raise TypeError("Algorithm I needs a deterministic Criterion")
    if algorithm == "II" and not isinstance(problem, NoisyCriterion):
        raise TypeError("Algorithm II needs a NoisyCriterion")
    if schedule is None:
        schedule = CoolingSchedule.constant(target.J)
    streams = ChainStreams(seed)
    if proposal.independent and schedule.kind == "constant" and not stepwise:
        start, thetas, accepted = _run_independent(algorithm, problem, schedule.cap,
                                                   target.delta, steps, streams)
    else:
        start, thetas, accepted = _run_stepwise(algorithm, problem, target, proposal,
                                                schedule, steps, streams)
    return ChainRun(streams.seed, algorithm, start, thetas, accepted)


@dataclass(frozen=True)
class RunSpec:
    algorithm: str
    problem: Problem
    target: TargetParams
    steps: int
    proposal: Proposal = field(default_factory=Proposal)
    schedule: Optional[CoolingSchedule] = None


def derive_seed(master_seed: int, index: int) -> int:
    """Per-run 64-bit seed from the master seed and the run index."""
    ss = np.random.SeedSequence([int(master_seed) & _U64, int(index)])
    return int(ss.generate_state(1, np.uint64)[0])


def run_ensemble(spec: RunSpec, count: int, master_seed: int, threads: int = 1) -> list[ChainRun]:
    """Independent chains, ordered by run index whatever the thread count."""
    if count < 1:
        raise ValueError("count must be >= 1")

    def one(i):
        return run_chain(spec.algorithm, spec.problem, spec.target, spec.proposal,
                         spec.steps, derive_seed(master_seed, i), spec.schedule)

    if threads <= 1:
        return [one(i) for i in range(count)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(one, range(count)))

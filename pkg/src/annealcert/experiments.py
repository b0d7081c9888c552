"""Success-rate experiments on the test problems, exported as CSV.

A run counts as a success at step k when its state lies in the level set
``{U >= grid max - level}``. Ensembles are simulated once per J and
shared by the individual experiments.
"""
from __future__ import annotations

import csv
import functools
import io
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .config import ExperimentConfig
from .domain import Criterion, NoisyCriterion, get_problem
from .errors import ConfigError
from .guarantees import TargetParams, sigma_for_j
from .oracle import GridField, estimate_M
from .sampler import ChainRun, Proposal, RunSpec, run_ensemble

THIN_AFTER = 10_000
THIN_EVERY = 10


# -- CSV ---------------------------------------------------------------------

def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_cell(v) for v in row])
    return buf.getvalue()


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(csv_text(header, rows), encoding="utf-8", newline="")
    return path


def trajectory_header(n: int) -> list[str]:
    return ["run_id", "step", *[f"theta_{i}" for i in range(n)], "accepted", "in_target"]


def trajectory_rows(run_id: int, run: ChainRun, in_target: Optional[np.ndarray] = None):
    for k, (step, theta, acc) in enumerate(run.trajectory()):
        flag = "" if in_target is None else bool(in_target[k])
        yield (run_id, step, *[float(t) for t in theta], acc, flag)


# -- ensembles ---------------------------------------------------------------

def resolve_problem(name: str):
    problem = get_problem(name)
    mean = problem.mean if isinstance(problem, NoisyCriterion) else problem
    return problem, mean


@functools.lru_cache(maxsize=8)
def oracle_field(problem: str, grid: int) -> GridField:
    _, mean = resolve_problem(problem)
    return GridField.build(mean, grid)


def success_threshold(config: ExperimentConfig) -> float:
    return oracle_field(config.problem, config.grid).max - config.level


@dataclass
class Ensemble:
    J: int
    runs: list[ChainRun]
    start_in_target: np.ndarray
    in_target: np.ndarray

    @property
    def steps(self) -> int:
        return self.in_target.shape[1]

    def fractions(self) -> np.ndarray:
        return self.in_target.mean(axis=0)

    def steady(self) -> float:
        window = max(1, self.steps // 10)
        return float(self.fractions()[-window:].mean())


def simulate(config: ExperimentConfig, J: int) -> Ensemble:
    problem, mean = resolve_problem(config.problem)
    algorithm = config.algorithm
    if algorithm == "I" and isinstance(problem, NoisyCriterion):
        problem = mean
    if algorithm == "II" and not isinstance(problem, NoisyCriterion):
        raise ConfigError(f"Algorithm II needs a noisy problem, got {config.problem!r}")
    spec = RunSpec(algorithm, problem, TargetParams(J, config.delta), config.steps, Proposal())
    runs = run_ensemble(spec, config.runs, config.seed, config.threads)
    thr = success_threshold(config)
    start = mean.values(np.stack([r.start for r in runs])) >= thr
    inside = np.stack([mean.values(r.thetas) >= thr for r in runs])
    return Ensemble(J, runs, start, inside)


def simulate_all(config: ExperimentConfig, Js: Optional[Sequence[int]] = None) -> dict[int, Ensemble]:
    return {J: simulate(config, J) for J in (Js or config.J)}


def _ensembles(config, ensembles, Js):
    ensembles = dict(ensembles or {})
    for J in Js:
        if J not in ensembles:
            ensembles[J] = simulate(config, J)
    return ensembles


def _binomial_se(p: float, runs: int) -> float:
    return math.sqrt(max(p * (1.0 - p), 0.0) / runs)


# -- experiments -------------------------------------------------------------

@dataclass
class SuccessCurve:
    J: int
    steps: np.ndarray
    fractions: np.ndarray
    steady: float


def recorded_steps(total: int) -> np.ndarray:
    """Every step up to 10^4, every 10th beyond."""
    steps = np.arange(1, total + 1)
    return steps[(steps <= THIN_AFTER) | (steps % THIN_EVERY == 0)]


def experiment_success_rate(config: ExperimentConfig, ensembles=None,
                            out: Optional[str] = None) -> list[SuccessCurve]:
    ensembles = _ensembles(config, ensembles, config.J)
    curves = []
    for J in config.J:
        ens = ensembles[J]
        steps = recorded_steps(ens.steps)
        curves.append(SuccessCurve(J, steps, ens.fractions()[steps - 1], ens.steady()))
    if out:
        rows = ((c.J, int(s), float(f)) for c in curves for s, f in zip(c.steps, c.fractions))
        write_csv(Path(out) / "success_rate.csv", ["J", "step", "success"], rows)
    return curves


@dataclass
class TVRow:
    step: int
    deviation: float
    envelope: float
    se: float

    @property
    def flagged(self) -> bool:
        return self.deviation > self.envelope + 3.0 * self.se


def default_M(config: ExperimentConfig) -> float:
    return estimate_M(oracle_field(config.problem, config.grid), (config.tv_J, config.delta))


def experiment_tv_decay(config: ExperimentConfig, M: Optional[float] = None, ensembles=None,
                        out: Optional[str] = None) -> list[TVRow]:
    """|success(k) - steady| next to the envelope (1 - 1/M)**k, k = 0 is the start."""
    M = M if M is not None else (config.M if config.M is not None else default_M(config))
    if M <= 1:
        raise ConfigError("M must exceed 1")
    ens = _ensembles(config, ensembles, [config.tv_J])[config.tv_J]
    steady = ens.steady()
    se = _binomial_se(steady, config.runs)
    series = np.concatenate([[ens.start_in_target.mean()], ens.fractions()])
    log_rate = math.log1p(-1.0 / M)
    rows = [TVRow(k, abs(float(s) - steady), math.exp(k * log_rate), se)
            for k, s in enumerate(series)]
    if out:
        write_csv(Path(out) / "tv_decay.csv", ["step", "deviation", "envelope", "se", "flagged"],
                  ((r.step, r.deviation, r.envelope, r.se, r.flagged) for r in rows))
    return rows


@dataclass
class SteadyRow:
    J: int
    failure: float
    single_run_failure: float
    theoretical: float
    se: float

    @property
    def within_bound(self) -> bool:
        return self.failure <= self.theoretical + 3.0 * self.se


def value_constants(config: ExperimentConfig) -> tuple[float, float, int]:
    _, mean = resolve_problem(config.problem)
    L = config.lipschitz if config.lipschitz is not None else mean.lipschitz
    if L is None:
        raise ConfigError(f"problem {config.problem!r} has no Lipschitz constant; set lipschitz")
    return L, mean.domain.enclosing_radius(), mean.domain.n


def experiment_steady_vs_J(config: ExperimentConfig, ensembles=None,
                           out: Optional[str] = None) -> list[SteadyRow]:
    """Empirical 1 - steady success per J against the certified 1 - sigma(J)."""
    ensembles = _ensembles(config, ensembles, config.J)
    L, R, n = value_constants(config)
    rows = []
    for J in config.J:
        ens = ensembles[J]
        steady = ens.steady()
        tail = ens.in_target[0, -min(config.tail, ens.steps):]
        sigma = sigma_for_j(J, config.epsilon, config.delta, L, R, n)
        rows.append(SteadyRow(J, 1.0 - steady, 1.0 - float(tail.mean()), 1.0 - sigma,
                              _binomial_se(steady, config.runs)))
    if out:
        write_csv(Path(out) / "steady_vs_j.csv",
                  ["J", "failure", "single_run_failure", "theoretical", "se", "within_bound"],
                  ((r.J, r.failure, r.single_run_failure, r.theoretical, r.se, r.within_bound)
                   for r in rows))
    return rows


@dataclass
class ScatterSet:
    J: int
    finals: np.ndarray
    final_in_target: np.ndarray
    tail: np.ndarray
    tail_in_target: np.ndarray
    tail_moves: int


def experiment_scatter(config: ExperimentConfig, ensembles=None,
                       out: Optional[str] = None) -> list[ScatterSet]:
    """Final states of every run and the last ``tail`` states of run 0."""
    ensembles = _ensembles(config, ensembles, config.J)
    sets = []
    for J in config.J:
        ens = ensembles[J]
        t = min(config.tail, ens.steps)
        run0 = ens.runs[0]
        sets.append(ScatterSet(J, np.stack([r.final for r in ens.runs]), ens.in_target[:, -1],
                               run0.thetas[-t:], ens.in_target[0, -t:],
                               int(run0.accepted[-t:].sum())))
    if out:
        n = sets[0].finals.shape[1]
        header = ["kind", "J", "run_id", "step", *[f"theta_{i}" for i in range(n)], "in_target"]

        def rows():
            for s in sets:
                for i, (theta, flag) in enumerate(zip(s.finals, s.final_in_target)):
                    yield ("final", s.J, i, config.steps, *theta.tolist(), bool(flag))
                first = config.steps - len(s.tail) + 1
                for j, (theta, flag) in enumerate(zip(s.tail, s.tail_in_target)):
                    yield ("tail", s.J, 0, first + j, *theta.tolist(), bool(flag))

        write_csv(Path(out) / "scatter.csv", header, rows())
    return sets

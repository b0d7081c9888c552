"""Command-line entry point: ``annealcert {bounds,run,experiment,verify}``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .config import ExperimentConfig, load_config
from .domain import peaks_criterion, step1d
from .errors import ConfigError, PremiseError
from .experiments import (experiment_scatter, experiment_steady_vs_J, experiment_success_rate,
                          experiment_tv_decay, resolve_problem, simulate,
                          trajectory_header, trajectory_rows, write_csv)
from .oracle import GridField, sweep_grid, theorem2_sweep
from .report import format_table, report_bounds

log = logging.getLogger("annealcert")

EXPERIMENTS = ("success-rate", "tv-decay", "steady-vs-j", "scatter")


def _u64(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _delta(text: str):
    return "auto" if text == "auto" else float(text)


def _shared(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key = value config file")
    p.add_argument("--seed", type=_u64, help="master seed (unsigned 64-bit)")
    p.add_argument("--out", help="output directory")
    p.add_argument("--threads", type=int, help="concurrent runs")


def _experiment_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--problem")
    p.add_argument("--algorithm", choices=("I", "II"))
    p.add_argument("--J", help="comma-separated exponents")
    p.add_argument("--delta", type=float)
    p.add_argument("--steps", type=int)
    p.add_argument("--runs", type=int)
    p.add_argument("--level", type=float)
    p.add_argument("--grid", type=int)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--lipschitz", type=float)
    p.add_argument("--tail", type=int)
    p.add_argument("--tv-J", dest="tv_J", type=int)
    p.add_argument("--M", type=float)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="annealcert", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    b = sub.add_parser("bounds", help="guarantee report for (epsilon, alpha, sigma)")
    _shared(b)
    b.add_argument("--eps", type=float, required=True)
    b.add_argument("--alpha", type=float, required=True)
    b.add_argument("--sigma", type=float)
    b.add_argument("--delta", type=_delta, default="auto")
    b.add_argument("--rho", type=float)
    b.add_argument("--gamma", type=float)
    b.add_argument("--L", type=float)
    b.add_argument("--R", type=float)
    b.add_argument("--n", type=int)
    b.add_argument("--beta", type=float, help="flat-top fraction of the domain")
    b.add_argument("--schedule", choices=("logarithmic", "algebraic"), default="algebraic")
    b.add_argument("--a", type=float, default=1.0, help="algebraic schedule exponent")
    b.add_argument("--json", action="store_true", help="print only the JSON report")

    r = sub.add_parser("run", help="run an ensemble and export trajectories")
    _shared(r)
    _experiment_flags(r)

    e = sub.add_parser("experiment", help="success-rate experiments")
    e.add_argument("which", choices=EXPERIMENTS)
    _shared(e)
    _experiment_flags(e)

    v = sub.add_parser("verify", help="grid-oracle check of the confidence bound")
    _shared(v)
    v.add_argument("--grid", type=int, default=601, help="peaks grid points per axis")
    return parser


def _config(args) -> ExperimentConfig:
    keys = [f for f in ExperimentConfig.__dataclass_fields__ if hasattr(args, f)]
    overrides = {k: getattr(args, k) for k in keys}
    return load_config(args.config, **overrides)


def _cmd_bounds(args) -> int:
    report = report_bounds(args.eps, args.alpha, args.sigma, args.delta, args.rho, args.gamma,
                           args.L, args.R, args.n, args.beta, args.schedule, args.a)
    text = json.dumps(report, indent=2)
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        (Path(args.out) / "bounds.json").write_text(text + "\n", encoding="utf-8")
    print(text)
    if not args.json:
        print()
        print(format_table(report))
    return 0


def _cmd_run(args) -> int:
    cfg = _config(args)
    out = Path(cfg.out)
    J = cfg.J[0]
    ens = simulate(cfg, J)
    _, mean = resolve_problem(cfg.problem)

    def rows():
        for i, run in enumerate(ens.runs):
            yield from trajectory_rows(i, run, ens.in_target[i])

    path = write_csv(out / "trajectories.csv", trajectory_header(mean.domain.n), rows())
    log.info("wrote %s", path)
    print(f"J={J} runs={cfg.runs} steps={cfg.steps} final success={ens.in_target[:, -1].mean():.4f}")
    return 0


def _cmd_experiment(args) -> int:
    cfg = _config(args)
    out = cfg.out
    if args.which == "success-rate":
        for c in experiment_success_rate(cfg, out=out):
            print(f"J={c.J}: steady success {c.steady:.4f}, final {c.fractions[-1]:.4f}")
    elif args.which == "tv-decay":
        rows = experiment_tv_decay(cfg, out=out)
        flagged = sum(r.flagged for r in rows)
        print(f"J={cfg.tv_J}: {flagged} steps above envelope + 3 SE")
        return 1 if flagged else 0
    elif args.which == "steady-vs-j":
        rows = experiment_steady_vs_J(cfg, out=out)
        for r in rows:
            print(f"J={r.J}: failure {r.failure:.4f}, bound {r.theoretical:.6g}, "
                  f"{'ok' if r.within_bound else 'VIOLATED'}")
        return 0 if all(r.within_bound for r in rows) else 1
    else:
        for s in experiment_scatter(cfg, out=out):
            print(f"J={s.J}: {s.final_in_target.mean():.4f} of final states in target, "
                  f"{s.tail_moves} moves in the last {len(s.tail)} steps of run 0")
    return 0


def verify_report(grid: int = 601) -> list[dict]:
    entries = []
    step_field = GridField.build(step1d(), 10_001)
    for e in theorem2_sweep(step_field, [(0.1, 0.05, 10, 0.1), (1.0, 1.0, 1, 1.0)]):
        entries.append({"problem": "step1d", **e.as_dict()})
    peaks_field = GridField.build(peaks_criterion(), grid)
    specs = sweep_grid((0.05, 0.1, 0.2), (0.01, 0.05, 0.1), (10, 50, 100), 0.1)
    for e in theorem2_sweep(peaks_field, specs):
        entries.append({"problem": "peaks", **e.as_dict()})
    return entries


def _cmd_verify(args) -> int:
    entries = verify_report(args.grid)
    text = json.dumps(entries, indent=2)
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        (Path(args.out) / "verify.json").write_text(text + "\n", encoding="utf-8")
    print(text)
    failed = [e for e in entries if not e["pass"]]
    print(f"{len(entries) - len(failed)}/{len(entries)} passed", file=sys.stderr)
    return 1 if failed else 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handlers = {"bounds": _cmd_bounds, "run": _cmd_run, "experiment": _cmd_experiment,
                "verify": _cmd_verify}
    try:
        return handlers[args.command](args)
    except (PremiseError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

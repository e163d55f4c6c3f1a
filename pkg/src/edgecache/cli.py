"""Command-line entry points.

    edgecache run <experiment-id> [--scenario FILE] [--seed N] [--out DIR]
                  [--schemes LIST] [--horizon T] [--v V] [--q Q] [--tau TAU]
                  [--parallel-bs]
    edgecache plotdata <figure-id> --in FILE --out FILE
    edgecache mg1check --config FILE

Exit code 0 on success, 1 with a diagnostic on any error.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

import yaml

from .baselines import SchemeId
from .experiments import EXPERIMENTS, emit_plotdata, run_experiment
from .mg1 import MG1SimConfig, mg1_event_sim, pk_sojourn
from .scenario import Scenario, load_scenario


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="edgecache")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a predefined experiment")
    run.add_argument("experiment", choices=sorted(EXPERIMENTS))
    run.add_argument("--scenario", type=Path, help="scenario YAML file")
    run.add_argument("--seed", type=int, help="override master seed")
    run.add_argument("--out", type=Path, default=Path("out"))
    run.add_argument("--schemes", help="comma-separated scheme subset")
    run.add_argument("--horizon", type=int, help="override slot horizon")
    run.add_argument("--reps", type=int, help="override replication count")
    run.add_argument("--v", dest="v_weight", type=float,
                     help="override tradeoff weight V")
    run.add_argument("--q", dest="energy_budget", type=float,
                     help="override long-term energy budget Q")
    run.add_argument("--tau", type=float, help="override smoothing parameter")
    run.add_argument("--parallel-bs", action="store_true",
                     help="simultaneous updates of non-interfering BSs")

    plot = sub.add_parser("plotdata", help="reshape metrics into plot series")
    plot.add_argument("figure", choices=["fig2", "fig3", "fig4", "fig5",
                                         "fig6", "fig7", "fig8", "fig9"])
    plot.add_argument("--in", dest="infile", type=Path, required=True)
    plot.add_argument("--out", dest="outfile", type=Path, required=True)

    mg1 = sub.add_parser("mg1check", help="compare the event-driven M/G/1 "
                                          "simulator against the analytic formula")
    mg1.add_argument("--config", type=Path, required=True)
    return parser


def _cmd_run(args) -> int:
    scenario = load_scenario(args.scenario) if args.scenario else Scenario()
    overrides = {}
    for name in ("seed", "v_weight", "energy_budget", "tau"):
        value = getattr(args, name)
        if value is not None:
            overrides[name] = value
    if args.parallel_bs:
        overrides["sampler_parallel"] = True
    if overrides:
        scenario = dataclasses.replace(scenario, **overrides)

    exp = EXPERIMENTS[args.experiment]
    if args.schemes:
        wanted = tuple(SchemeId(s.strip()) for s in args.schemes.split(","))
        exp = dataclasses.replace(exp, schemes=wanted)
    if args.horizon:
        exp = dataclasses.replace(exp, horizon=args.horizon)
    if args.reps:
        exp = dataclasses.replace(exp, seeds=tuple(range(args.reps)))
    path = run_experiment(exp, scenario, args.out)
    print(f"metrics written to {path}")
    return 0


def _cmd_plotdata(args) -> int:
    out = emit_plotdata(args.infile, args.figure, args.outfile)
    print(f"plot data written to {out}")
    return 0


def _cmd_mg1check(args) -> int:
    raw = yaml.safe_load(args.config.read_text()) or {}
    raw["mix_weights"] = tuple(raw.get("mix_weights", (1.0,)))
    raw["mix_means"] = tuple(raw.get("mix_means", (0.3,)))
    cfg = MG1SimConfig(**raw)
    result = mg1_event_sim(cfg)
    analytic = pk_sojourn(cfg)
    rel = abs(result.mean_sojourn - analytic) / analytic
    print(f"utilization        : {result.utilization:.4f}")
    print(f"simulated sojourn  : {result.mean_sojourn:.6f} "
          f"+/- {result.ci_halfwidth:.6f} s")
    print(f"analytic sojourn   : {analytic:.6f} s")
    print(f"relative error     : {rel:.4%}")
    return 0 if rel < 0.03 else 1


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "plotdata":
            return _cmd_plotdata(args)
        if args.command == "mg1check":
            return _cmd_mg1check(args)
        return 1
    except Exception as err:  # CLI boundary: report and signal failure
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

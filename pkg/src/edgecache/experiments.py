"""Experiment definitions, the metrics CSV sink and plot-data reshaping.

Every experiment executes a cross product of schemes x replications x sweep
points over a scenario, writing one time-series row per slot to a single
CSV (schema below). All schemes inside one (sweep point, replication) cell
see the identical demand stream and sampler seeds (see scenario seed rule),
so comparisons are paired.

Metrics schema (v1):
    schema, experiment, scheme, seed, sweep_param, sweep_value, t,
    delay, energy, q, avg_delay, avg_energy, energy_budget,
    cache_masks, cpu_cycles, covered_demand, sampler_iters, flagged

cache_masks / cpu_cycles / covered_demand are per-BS values joined with
';' (cache rows encoded as bitmask integers, bit k = service k).
"""

from __future__ import annotations

import csv
import dataclasses
import statistics
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd

from .baselines import (SchemeId, centralized_delay_optimal, myopic,
                        non_cooperative)
from .cost import system_cost
from .gibbs import run_sampler
from .model import Decision, NetworkModel, ServiceCatalog, SlotState
from .oreo import ControllerState, step
from .scenario import Scenario

SCHEMA_VERSION = 1

METRIC_COLUMNS = ["schema", "experiment", "scheme", "seed", "sweep_param",
                  "sweep_value", "t", "delay", "energy", "q", "avg_delay",
                  "avg_energy", "energy_budget", "cache_masks", "cpu_cycles",
                  "covered_demand", "sampler_iters", "flagged"]


@dataclass(frozen=True)
class Experiment:
    exp_id: str
    schemes: tuple[SchemeId, ...]
    horizon: int
    seeds: tuple[int, ...]
    sweep_param: str | None = None
    sweep_values: tuple[float, ...] = ()

    def __post_init__(self):
        if not self.seeds:
            raise ValueError("experiment needs at least one seed")
        if any(v <= 0 for v in self.sweep_values):
            raise ValueError("sweep values must be positive")


_ALL = (SchemeId.OREO, SchemeId.CENTRALIZED_DELAY_OPTIMAL,
        SchemeId.MYOPIC, SchemeId.NON_COOPERATIVE)

EXPERIMENTS: dict[str, Experiment] = {
    "fig2_3": Experiment("fig2_3", _ALL, horizon=150, seeds=tuple(range(20))),
    "fig4_convergence": Experiment(
        "fig4_convergence", (SchemeId.OREO,), horizon=1, seeds=(0,),
        sweep_param="tau", sweep_values=(1e-3, 1e-2, 1e-1, 1.0)),
    "fig5_6_storage_sweep": Experiment(
        "fig5_6_storage_sweep", _ALL, horizon=150, seeds=tuple(range(20)),
        sweep_param="storage_cap", sweep_values=(50.0, 120.0, 200.0)),
    "fig7_Q_sweep": Experiment(
        "fig7_Q_sweep", (SchemeId.OREO,), horizon=150, seeds=tuple(range(20)),
        sweep_param="energy_budget", sweep_values=(30.0, 55.0, 80.0)),
    "fig8_9_traces": Experiment(
        "fig8_9_traces", (SchemeId.OREO,), horizon=20, seeds=(0,)),
}


def _apply_sweep(scenario: Scenario, param: str | None, value: float) -> Scenario:
    if param is None:
        return scenario
    if not hasattr(scenario, param):
        raise ValueError(f"unknown sweep parameter {param!r}")
    return dataclasses.replace(scenario, **{param: value})


def _decision_for(scheme: SchemeId, net: NetworkModel, cat: ServiceCatalog,
                  slot: SlotState, scenario: Scenario, seed: int
                  ) -> tuple[Decision, int, bool]:
    cfg = scenario.sampler_config(seed=seed)
    if scheme == SchemeId.NON_COOPERATIVE:
        return non_cooperative(net, cat, slot), 0, False
    if scheme == SchemeId.CENTRALIZED_DELAY_OPTIMAL:
        return centralized_delay_optimal(net, cat, slot, cfg), 0, False
    if scheme == SchemeId.MYOPIC:
        res = myopic(net, cat, slot, cfg, scenario.energy_budget)
        return res.decision, 0, res.over_budget
    raise ValueError(f"per-slot decision undefined for scheme {scheme}")


def _run_cell(exp: Experiment, scenario: Scenario, scheme: SchemeId,
              rep: int, sweep_idx: int, sweep_value: float | None,
              writer: csv.writer):
    net = scenario.build_network()
    cat = scenario.build_catalog()
    slots = scenario.slot_stream(net, sweep_idx, rep)
    seeds = scenario.sampler_seeds(sweep_idx, rep)
    cov = net.coverage_matrix
    state = ControllerState(v_weight=scenario.v_weight,
                            energy_budget=scenario.energy_budget)
    sum_d = sum_e = 0.0
    for t in range(exp.horizon):
        slot = next(slots)
        seed = next(seeds)
        if scheme == SchemeId.OREO:
            cfg = scenario.sampler_config(seed=seed)
            decision, record, state = step(state, net, cat, slot, cfg)
            cost = None
            delay, energy = record.delay_cost, record.energy
            q, iters, flagged = record.backlog_before, record.sampler_iterations, record.fallback
        else:
            decision, iters, flagged = _decision_for(scheme, net, cat, slot,
                                                     scenario, seed)
            cost = system_cost(net, cat, slot, decision)
            delay, energy = cost.delay_cost, cost.energy
            q = 0.0
        sum_d += delay
        sum_e += energy
        masks = ";".join(str(int("".join(map(str, decision.cache[n][::-1])), 2))
                         for n in range(net.n_bs))
        if cost is None:
            cost = system_cost(net, cat, slot, decision)
        cycles = ";".join(f"{bd.retained_rates @ cat.workload:.5g}"
                          for bd in cost.breakdowns)
        covered = slot.demand.sum(axis=0) @ cov      # per-BS covered demand
        covered_s = ";".join(f"{x:.5g}" for x in covered)
        writer.writerow([
            SCHEMA_VERSION, exp.exp_id, scheme.value, rep,
            exp.sweep_param or "", "" if sweep_value is None else repr(sweep_value),
            t, repr(delay), repr(energy), repr(q),
            repr(sum_d / (t + 1)), repr(sum_e / (t + 1)),
            repr(scenario.energy_budget), masks, cycles, covered_s,
            iters, int(flagged)])


def run_experiment(exp: Experiment, scenario: Scenario,
                   out_dir: str | Path) -> Path:
    """Execute all cells of an experiment; returns the metrics CSV path."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if exp.exp_id == "fig4_convergence":
        return _run_convergence(exp, scenario, out_dir)
    out_path = out_dir / f"{exp.exp_id}.csv"
    sweep_points = (list(enumerate(exp.sweep_values))
                    if exp.sweep_values else [(0, None)])
    with open(out_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(METRIC_COLUMNS)
        for sweep_idx, value in sweep_points:
            swept = _apply_sweep(scenario, exp.sweep_param, value) \
                if value is not None else scenario
            for scheme in exp.schemes:
                for rep in exp.seeds:
                    _run_cell(exp, swept, scheme, rep, sweep_idx, value, writer)
    print_summary(out_path)
    return out_path


def _run_convergence(exp: Experiment, scenario: Scenario, out_dir: Path) -> Path:
    """Sampler traces on a single slot for each smoothing parameter value."""
    out_path = out_dir / f"{exp.exp_id}.csv"
    net = scenario.build_network()
    cat = scenario.build_catalog()
    slot = next(scenario.slot_stream(net, 0, exp.seeds[0]))
    seed = next(scenario.sampler_seeds(0, exp.seeds[0]))
    with open(out_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["schema", "experiment", "tau", "iteration", "bs",
                         "current_f", "best_f", "accepted"])
        for tau in exp.sweep_values:
            cfg = scenario.sampler_config(seed=seed, tau=tau)
            cfg.stall_limit = None       # show the raw convergence profile
            _, trace = run_sampler(net, cat, slot, scenario.v_weight, 0.0, cfg)
            for row in zip(trace.iterations, trace.bs, trace.current_f,
                           trace.best_f, trace.accepted):
                writer.writerow([SCHEMA_VERSION, exp.exp_id, repr(tau),
                                 row[0], row[1], repr(row[2]), repr(row[3]),
                                 int(row[4])])
    return out_path


def print_summary(metrics_path: str | Path):
    """Mean +/- stdev of the final running averages per scheme/sweep point."""
    df = pd.read_csv(metrics_path)
    if "avg_delay" not in df.columns:
        return
    final = df.loc[df.groupby(["scheme", "sweep_value", "seed"], dropna=False)
                   ["t"].idxmax()]
    print(f"{'scheme':<14} {'sweep':>10} {'delay':>20} {'energy':>20}")
    for (scheme, sweep), grp in final.groupby(["scheme", "sweep_value"],
                                              dropna=False):
        d, e = grp["avg_delay"], grp["avg_energy"]
        ds = statistics.stdev(d) if len(d) > 1 else 0.0
        es = statistics.stdev(e) if len(e) > 1 else 0.0
        sweep_s = "" if pd.isna(sweep) else f"{sweep:g}"
        print(f"{scheme:<14} {sweep_s:>10} {d.mean():>12.3f} ± {ds:<6.3f}"
              f" {e.mean():>12.3f} ± {es:<6.3f}")


class PlotSchemaError(ValueError):
    """Metrics file lacks the columns required by the requested figure."""


def _require(df: pd.DataFrame, cols: list[str]):
    missing = [c for c in cols if c not in df.columns]
    if missing:
        raise PlotSchemaError(f"metrics file missing columns {missing}")


def _split_col(df: pd.DataFrame, col: str) -> pd.DataFrame:
    parts = df[col].str.split(";", expand=True).astype(float)
    parts.columns = [f"{col}_bs{j}" for j in range(parts.shape[1])]
    return parts


def emit_plotdata(metrics_path: str | Path, figure_id: str,
                  out_path: str | Path) -> Path:
    """Reshape a metrics CSV into a tidy per-figure table (one series per
    column); no rendering is performed."""
    df = pd.read_csv(metrics_path)
    out_path = Path(out_path)
    if figure_id in ("fig2", "fig3"):
        _require(df, ["t", "scheme", "avg_delay", "avg_energy", "energy_budget"])
        value = "avg_delay" if figure_id == "fig2" else "avg_energy"
        wide = (df.groupby(["t", "scheme"])[value].mean()
                .unstack("scheme").reset_index())
        if figure_id == "fig3":
            wide["energy_budget"] = df["energy_budget"].iloc[0] if len(df) else np.nan
        wide.to_csv(out_path, index=False)
    elif figure_id == "fig4":
        _require(df, ["tau", "iteration", "best_f"])
        wide = (df.groupby(["iteration", "tau"])["best_f"].mean()
                .unstack("tau").reset_index())
        wide.columns = ["iteration"] + [f"best_f_tau={c:g}"
                                        for c in wide.columns[1:]]
        wide.to_csv(out_path, index=False)
    elif figure_id in ("fig5", "fig6", "fig7"):
        _require(df, ["t", "scheme", "seed", "sweep_value",
                      "avg_delay", "avg_energy"])
        value = "avg_energy" if figure_id == "fig6" else "avg_delay"
        final = df.loc[df.groupby(["scheme", "sweep_value", "seed"])
                       ["t"].idxmax()]
        wide = (final.groupby(["sweep_value", "scheme"])[value].mean()
                .unstack("scheme").reset_index())
        wide.to_csv(out_path, index=False)
    elif figure_id == "fig8":
        _require(df, ["t", "covered_demand"])
        out = pd.concat([df[["t"]], _split_col(df, "covered_demand")], axis=1)
        out.to_csv(out_path, index=False)
    elif figure_id == "fig9":
        _require(df, ["t", "q", "cpu_cycles"])
        out = pd.concat([df[["t", "q"]], _split_col(df, "cpu_cycles")], axis=1)
        out.to_csv(out_path, index=False)
    else:
        raise ValueError(f"unknown figure id {figure_id!r}")
    return out_path

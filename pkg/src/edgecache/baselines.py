"""Comparison schemes and the exhaustive offline oracle.

Non-cooperative: every BS greedily caches its locally most demanded services
and offloads to minimize its own delay, ignoring neighbors and the energy
budget. Centralized delay-optimal: global delay minimization with no energy
budget. Myopic: delay minimization under a hard per-slot energy budget equal
to the long-term budget. The exhaustive oracle enumerates all feasible
caching matrices and is used as the ground truth in tests.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .gibbs import (SamplerConfig, SlotEvaluator, StateSpaceTooLargeError,
                    _run_on_evaluator, feasible_rows, run_sampler)
from .model import Decision, NetworkModel, ServiceCatalog, SlotState
from .offload import SlotInfeasibleError, solve_offload


class SchemeId(str, Enum):
    OREO = "oreo"
    NON_COOPERATIVE = "noncoop"
    CENTRALIZED_DELAY_OPTIMAL = "centralized"
    MYOPIC = "myopic"
    EXHAUSTIVE_ORACLE = "exhaustive"


def non_cooperative(net: NetworkModel, cat: ServiceCatalog,
                    slot: SlotState) -> Decision:
    """Each BS caches its locally most demanded services (ties to the lower
    service index) and picks the delay-minimizing offload fraction."""
    cov = net.coverage_matrix                      # (M, N)
    local_demand = slot.demand @ cov               # (K, N): sum over covered regions
    cache = np.zeros((net.n_bs, cat.n_services), dtype=np.int8)
    for n in range(net.n_bs):
        order = sorted(range(cat.n_services),
                       key=lambda k: (-local_demand[k, n], k))
        remaining = net.storage_cap[n]
        for k in order:
            if cat.storage[k] <= remaining:
                cache[n, k] = 1
                remaining -= cat.storage[k]
    b, _ = solve_offload(net, cat, slot, cache, v_weight=1.0, q_backlog=0.0)
    return Decision(cache=cache, offload=b)


def centralized_delay_optimal(net: NetworkModel, cat: ServiceCatalog,
                              slot: SlotState, cfg: SamplerConfig,
                              exhaustive_cutoff: int = 4096) -> Decision:
    """Global delay minimization ignoring the long-term energy budget."""
    if _joint_states(net, cat, exhaustive_cutoff) is not None:
        dec, _ = exhaustive_oracle(net, cat, slot, v_weight=1.0,
                                   q_backlog=0.0, max_states=exhaustive_cutoff)
        return dec
    dec, _ = run_sampler(net, cat, slot, v_weight=1.0, q_backlog=0.0, cfg=cfg)
    return dec


@dataclass(frozen=True)
class MyopicResult:
    decision: Decision
    over_budget: bool = False


def myopic(net: NetworkModel, cat: ServiceCatalog, slot: SlotState,
           cfg: SamplerConfig, energy_budget: float) -> MyopicResult:
    """Delay minimization under a hard per-slot total energy budget.

    The budget is enforced by capping each BS's load-dependent energy at an
    equal share of the headroom left after static and auxiliary draws. When
    even the all-zero cache busts the budget the slot is flagged over-budget.
    """
    try:
        ev = SlotEvaluator(net, cat, slot, v_weight=1.0, q_backlog=0.0,
                           energy_budget=energy_budget)
        rng = np.random.default_rng(cfg.seed)
        dec, _ = _run_on_evaluator(ev, cfg, rng)
        return MyopicResult(decision=dec)
    except SlotInfeasibleError as err:
        if err.bs == -1:
            return MyopicResult(
                decision=Decision.zeros(net.n_bs, cat.n_services),
                over_budget=True)
        raise


def _joint_states(net: NetworkModel, cat: ServiceCatalog,
                  cutoff: int) -> list[np.ndarray] | None:
    """Per-BS feasible row sets when the joint count fits the cutoff."""
    if cat.n_services > 20:
        return None
    try:
        row_sets = [feasible_rows(net.storage_cap[n], cat.storage)
                    for n in range(net.n_bs)]
    except StateSpaceTooLargeError:
        return None
    total = 1
    for rows in row_sets:
        total *= len(rows)
        if total > cutoff:
            return None
    return row_sets


def exhaustive_oracle(net: NetworkModel, cat: ServiceCatalog, slot: SlotState,
                      v_weight: float, q_backlog: float,
                      max_states: int = 100_000) -> tuple[Decision, float]:
    """Global minimizer of V*D_hat + q*E_hat over all storage-feasible caching
    matrices (ties broken lexicographically on the flattened cache)."""
    row_sets = _joint_states(net, cat, max_states)
    if row_sets is None:
        raise StateSpaceTooLargeError(
            f"joint cache state count exceeds guard {max_states}")
    ev = SlotEvaluator(net, cat, slot, v_weight, q_backlog)
    best = None
    for combo in itertools.product(*row_sets):
        cache = np.stack(combo)
        try:
            st = ev.full_eval(cache)
        except SlotInfeasibleError:
            continue
        key = (st.f, tuple(int(x) for x in cache.ravel()))
        if best is None or key < best[0]:
            best = (key, cache, st.b.copy())
    if best is None:
        raise SlotInfeasibleError(-1, "no feasible caching state")
    (f_star, _), cache, b = best
    return Decision(cache=cache, offload=b), float(f_star)

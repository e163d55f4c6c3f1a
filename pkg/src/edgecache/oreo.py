"""Online controller: per-slot drift-plus-penalty optimization with a
virtual energy-deficit queue.

Each slot the controller minimizes V*D_hat + q(t)*E_hat via the Gibbs
sampler, then updates the deficit queue with the realized energy:

    q(t+1) = max(q(t) + E_hat - Q, 0)

A larger backlog makes the energy term dominate, steering the long-run
average energy toward the budget Q without knowledge of future demand.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Iterable, Iterator

import numpy as np

from .cost import system_cost
from .gibbs import SamplerConfig, run_sampler
from .model import Decision, NetworkModel, ServiceCatalog, SlotState
from .offload import SlotInfeasibleError


class ControllerAbort(RuntimeError):
    """Even the all-zero fallback decision violates the per-slot energy cap."""


@dataclass(frozen=True)
class ControllerState:
    v_weight: float                 # delay-vs-energy tradeoff knob V
    energy_budget: float            # long-term per-slot energy budget Q
    backlog: float = 0.0            # virtual queue q(t)
    slot_index: int = 0

    def __post_init__(self):
        if self.v_weight < 0:
            raise ValueError("v_weight must be non-negative")
        if self.energy_budget <= 0:
            raise ValueError("energy_budget must be positive")
        if self.backlog < 0:
            raise ValueError("backlog must be non-negative")


@dataclass(frozen=True)
class SlotRecord:
    slot_index: int
    decision: Decision
    delay_cost: float
    energy: float
    backlog_before: float
    backlog_after: float
    sampler_iterations: int
    fallback: bool = False


def step(state: ControllerState, net: NetworkModel, cat: ServiceCatalog,
         slot: SlotState, cfg: SamplerConfig
         ) -> tuple[Decision, SlotRecord, ControllerState]:
    """One controller slot: solve P2 at the current backlog, realize the
    cost, update the deficit queue."""
    fallback = False
    try:
        decision, trace = run_sampler(net, cat, slot, state.v_weight,
                                      state.backlog, cfg)
        iters = len(trace.iterations)
    except SlotInfeasibleError:
        # keep long runs alive: the all-zero cache is always storage-feasible
        decision = Decision.zeros(net.n_bs, cat.n_services)
        iters = 0
        fallback = True

    cost = system_cost(net, cat, slot, decision)
    if fallback:
        over = np.flatnonzero(
            net.static_power + slot.aux_energy > net.e_max)
        if over.size:
            raise ControllerAbort(
                f"static+aux energy exceeds e_max at BS {over.tolist()}")

    q_after = max(state.backlog + cost.energy - state.energy_budget, 0.0)
    record = SlotRecord(slot_index=state.slot_index, decision=decision,
                        delay_cost=cost.delay_cost, energy=cost.energy,
                        backlog_before=state.backlog, backlog_after=q_after,
                        sampler_iterations=iters, fallback=fallback)
    new_state = replace(state, backlog=q_after, slot_index=state.slot_index + 1)
    return decision, record, new_state


def run_horizon(state: ControllerState, net: NetworkModel,
                cat: ServiceCatalog, slots: Iterable[SlotState],
                horizon: int, cfg: SamplerConfig,
                sampler_seeds: Iterator[int] | None = None) -> list[SlotRecord]:
    """Run the controller for `horizon` sequential slots drawn from `slots`.

    sampler_seeds, when given, supplies one sampler seed per slot so that
    runs are reproducible under the documented seed-splitting rule.
    """
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    records = []
    it = iter(slots)
    for t in range(horizon):
        slot = next(it)
        slot_cfg = cfg
        if sampler_seeds is not None:
            slot_cfg = replace(cfg, seed=next(sampler_seeds))
        _, record, state = step(state, net, cat, slot, slot_cfg)
        records.append(record)
    return records


def drift_bound_constant(net: NetworkModel, energy_budget: float) -> float:
    """Lyapunov drift constant B = (sum of per-BS energy caps - Q)^2 / 2,
    reported alongside measured averages as the D_opt + B/V bound."""
    return 0.5 * (float(net.e_max.sum()) - energy_budget) ** 2


def running_averages(records: list[SlotRecord]) -> tuple[np.ndarray, np.ndarray]:
    """Cumulative time-averages of delay cost and energy over a record list."""
    t = np.arange(1, len(records) + 1, dtype=float)
    d = np.cumsum([r.delay_cost for r in records]) / t
    e = np.cumsum([r.energy for r in records]) / t
    return d, e

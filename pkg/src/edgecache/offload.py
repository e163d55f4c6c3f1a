"""Inner continuous solve: the best offload vector for a fixed caching matrix.

Because the per-BS delay cost and energy depend only on the BS's own offload
fraction once arrival rates are fixed, the weighted objective decomposes into
independent 1-D problems, each solved by a bracketed golden-section search
(see kernels.solve_bs).
"""

from __future__ import annotations

import numpy as np

from . import kernels
from .cost import EPS_STAB, system_cost
from .model import Decision, NetworkModel, ServiceCatalog, SlotState, split_demand

#: Golden-section termination width on the offload fraction.
B_TOL = 1e-7


class SlotInfeasibleError(RuntimeError):
    """No offload vector satisfies the per-slot caps for some BS."""

    def __init__(self, bs: int, msg: str = ""):
        self.bs = bs
        super().__init__(msg or f"per-slot constraints infeasible at BS {bs}")


def _bs_constants(net: NetworkModel, cat: ServiceCatalog,
                  rates: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(lam, w, v): total rate, offered Gcycles/s and second-moment load."""
    mu = cat.workload
    lam = rates.sum(axis=1)
    w = rates @ mu
    v = rates @ (2.0 * mu * mu)
    return lam, w, v


def solve_offload(net: NetworkModel, cat: ServiceCatalog, slot: SlotState,
                  cache: np.ndarray, v_weight: float,
                  q_backlog: float) -> tuple[np.ndarray, float]:
    """Best offload vector and objective value V*D_hat + q*E_hat for `cache`.

    Raises SlotInfeasibleError when some BS has no feasible offload fraction.
    """
    if v_weight < 0 or q_backlog < 0:
        raise ValueError("weights must be non-negative")
    arrivals = split_demand(net, slot, cache)
    lam, w, v = _bs_constants(net, cat, arrivals.rates)
    e_head = net.e_max - net.static_power - slot.aux_energy
    n = net.n_bs
    b = np.zeros(n)
    d = np.zeros(n)
    e = np.zeros(n)
    bad = kernels.solve_many(np.arange(n, dtype=np.int64), lam, w, v,
                             net.cpu_freq, net.unit_energy, net.static_power,
                             slot.cloud_delay, v_weight, q_backlog, e_head,
                             net.d_max, EPS_STAB, B_TOL, b, d, e)
    if bad >= 0:
        raise SlotInfeasibleError(int(bad))
    d_hat = d.sum() + slot.cloud_delay * arrivals.uncovered
    e_hat = e.sum() + slot.aux_energy.sum()
    return b, float(v_weight * d_hat + q_backlog * e_hat)


def objective_value(net: NetworkModel, cat: ServiceCatalog, slot: SlotState,
                    dec: Decision, v_weight: float, q_backlog: float) -> float:
    """V*D_hat + q*E_hat for an explicit decision (cache and offload)."""
    cost = system_cost(net, cat, slot, dec)
    return float(v_weight * cost.delay_cost + q_backlog * cost.energy)

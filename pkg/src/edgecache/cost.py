"""Per-BS energy, M/G/1 sojourn time, delay cost and system-level totals.

Each BS serves a Poisson stream whose service-size distribution is a mixture
of exponentials (one component per cached service). The sojourn time uses
the Pollaczek-Khinchine mean-value formula with service sizes in cycles
served at cpu_freq cycles/s, i.e.

    T = E[s]/f + lam * E[s^2] / (2 f (f - lam E[s]))

which reduces to the M/M/1 closed form 1/(f/mu - lam) for a single service.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import ArrivalProfile, Decision, NetworkModel, ServiceCatalog, SlotState

#: Solvers must keep utilization below (1 - EPS_STAB).
EPS_STAB = 1e-6


class QueueUnstableError(RuntimeError):
    """Offered work meets or exceeds the CPU speed of a BS."""


@dataclass(frozen=True)
class BsCostBreakdown:
    bs: int
    retained_rates: np.ndarray   # b_n * lambda[n, k]
    local_rate: float            # b_n * lambda[n]
    utilization: float
    energy: float
    sojourn: float
    delay_cost: float


@dataclass(frozen=True)
class SystemCost:
    delay_cost: float            # D-hat: sum of per-BS costs plus cloud term
    energy: float                # E-hat: sum of per-BS energy incl. aux draw
    breakdowns: tuple[BsCostBreakdown, ...]


def service_moments(retained_rates: np.ndarray,
                    cat: ServiceCatalog) -> tuple[float, float, float]:
    """First/second moments of the service-size mixture and the total rate.

    Returns (E[s], E[s^2], lam_tilde). An idle BS (zero total rate) returns
    (0, 0, 0) by convention.
    """
    rates = np.asarray(retained_rates, dtype=float)
    if np.any(rates < 0):
        raise ValueError("retained rates must be non-negative")
    total = float(rates.sum())
    if total == 0.0:
        return 0.0, 0.0, 0.0
    mu = cat.workload
    es = float((mu * rates).sum() / total)
    es2 = float((2.0 * mu * mu * rates).sum() / total)
    return es, es2, total


def sojourn_time(net: NetworkModel, n: int,
                 moments: tuple[float, float, float]) -> float:
    """Mean sojourn time (seconds) of the M/G/1 queue at BS n."""
    es, es2, lam = moments
    if lam == 0.0:
        return 0.0
    f = net.cpu_freq[n]
    offered = lam * es
    if offered >= f:
        raise QueueUnstableError(
            f"BS {n}: offered work {offered:g} Gcyc/s >= cpu speed {f:g}")
    return es / f + lam * es2 / (2.0 * f * (f - offered))


def bs_energy(net: NetworkModel, cat: ServiceCatalog, n: int, dec: Decision,
              arrivals: ArrivalProfile) -> float:
    """Per-slot energy of BS n: static power plus energy per retained cycle."""
    cycles = float((dec.cache[n] * arrivals.rates[n]).dot(cat.workload))
    return float(net.static_power[n]
                 + net.unit_energy[n] * dec.offload[n] * cycles)


def bs_delay_cost(net: NetworkModel, cat: ServiceCatalog, n: int,
                  dec: Decision, arrivals: ArrivalProfile, h: float) -> float:
    """Expected delay cost at BS n: retained traffic times sojourn plus the
    cloud penalty for the offloaded remainder."""
    retained = dec.offload[n] * arrivals.rates[n]
    moments = service_moments(retained, cat)
    t_n = sojourn_time(net, n, moments)
    lam_n = arrivals.totals[n]
    lam_tilde = moments[2]
    return float(lam_tilde * t_n + (lam_n - lam_tilde) * h)


def bs_breakdown(net: NetworkModel, cat: ServiceCatalog, n: int,
                 dec: Decision, arrivals: ArrivalProfile,
                 h: float) -> BsCostBreakdown:
    retained = dec.offload[n] * arrivals.rates[n]
    es, es2, lam_tilde = service_moments(retained, cat)
    t_n = sojourn_time(net, n, (es, es2, lam_tilde))
    lam_n = arrivals.totals[n]
    delay = lam_tilde * t_n + (lam_n - lam_tilde) * h
    energy = bs_energy(net, cat, n, dec, arrivals)
    rho = lam_tilde * es / net.cpu_freq[n]
    return BsCostBreakdown(bs=n, retained_rates=retained, local_rate=lam_tilde,
                           utilization=float(rho), energy=energy,
                           sojourn=t_n, delay_cost=float(delay))


def system_cost(net: NetworkModel, cat: ServiceCatalog, slot: SlotState,
                dec: Decision) -> SystemCost:
    """Total delay cost (including the cloud term for uncovered demand) and
    total energy (including auxiliary load-independent energy)."""
    from .model import split_demand, validate_decision

    report = validate_decision(net, cat, dec)
    if not report:
        raise ValueError(f"infeasible decision: {report.violations}")
    arrivals = split_demand(net, slot, dec.cache)
    breakdowns = tuple(bs_breakdown(net, cat, n, dec, arrivals, slot.cloud_delay)
                       for n in range(net.n_bs))
    d_hat = sum(b.delay_cost for b in breakdowns) + slot.cloud_delay * arrivals.uncovered
    e_hat = sum(b.energy for b in breakdowns) + float(slot.aux_energy.sum())
    return SystemCost(delay_cost=float(d_hat), energy=float(e_hat),
                      breakdowns=breakdowns)


@dataclass(frozen=True)
class ConstraintReport:
    ok: bool
    energy_violations: tuple[int, ...] = ()
    delay_violations: tuple[int, ...] = ()

    def __bool__(self) -> bool:
        return self.ok


def per_slot_constraints_ok(net: NetworkModel, slot: SlotState,
                            breakdowns: tuple[BsCostBreakdown, ...]) -> ConstraintReport:
    """Check the closed per-slot caps E_n + aux_n <= e_max and D_n <= d_max."""
    e_bad = tuple(b.bs for b in breakdowns
                  if b.energy + slot.aux_energy[b.bs] > net.e_max[b.bs])
    d_bad = tuple(b.bs for b in breakdowns if b.delay_cost > net.d_max[b.bs])
    return ConstraintReport(not e_bad and not d_bad, e_bad, d_bad)

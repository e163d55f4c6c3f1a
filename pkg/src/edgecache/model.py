"""Static network description, per-slot inputs and the demand-splitting rule.

A network is a set of base stations (BSs) with storage, CPU and energy
parameters, plus a coverage map telling which BSs are in radio range of each
demand region. Regional demand for a service is split evenly among the
covering BSs that currently cache that service; regions with no covering
cache send their demand straight to the cloud.

Units follow one convention throughout the package: CPU work in Gcycles,
CPU speed in Gcycles/s, demand in tasks/s, storage in GB, energy in abstract
energy units per slot (slot length normalized to 1).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np


class ConfigurationError(ValueError):
    """Raised when a network/scenario description violates its invariants."""


def _freeze(arr) -> np.ndarray:
    out = np.asarray(arr, dtype=float).copy()
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class NetworkModel:
    """Static topology and per-BS resource parameters.

    coverage[m] is the set of BS indices in radio range of region m.
    """

    n_bs: int
    n_regions: int
    n_services: int
    coverage: tuple[frozenset[int], ...]
    storage_cap: np.ndarray     # C_n, GB
    cpu_freq: np.ndarray        # f_n, Gcycles/s
    static_power: np.ndarray    # gamma_n, energy/slot while powered on
    unit_energy: np.ndarray     # kappa_n, energy per Gcycle processed
    e_max: np.ndarray           # per-slot energy cap per BS
    d_max: np.ndarray           # per-slot delay-cost cap per BS

    def __post_init__(self):
        for name in ("storage_cap", "cpu_freq", "static_power",
                     "unit_energy", "e_max", "d_max"):
            object.__setattr__(self, name, _freeze(getattr(self, name)))
        object.__setattr__(self, "coverage",
                           tuple(frozenset(b) for b in self.coverage))
        self._validate()

    def _validate(self):
        n, m = self.n_bs, self.n_regions
        if len(self.coverage) != m:
            raise ConfigurationError(f"coverage has {len(self.coverage)} regions, expected {m}")
        for i, bset in enumerate(self.coverage):
            if not bset:
                raise ConfigurationError(f"region {i} has no covering BS")
            if not all(0 <= b < n for b in bset):
                raise ConfigurationError(f"region {i} references BS outside 0..{n - 1}")
        for name, arr in (("storage_cap", self.storage_cap),
                          ("cpu_freq", self.cpu_freq)):
            if arr.shape != (n,):
                raise ConfigurationError(f"{name} must have shape ({n},)")
            if np.any(arr <= 0):
                raise ConfigurationError(f"{name} must be positive")
        for name in ("static_power", "unit_energy", "e_max", "d_max"):
            arr = getattr(self, name)
            if arr.shape != (n,):
                raise ConfigurationError(f"{name} must have shape ({n},)")
            if np.any(arr < 0):
                raise ConfigurationError(f"{name} must be non-negative")
        if np.any(self.e_max <= self.static_power):
            raise ConfigurationError("e_max must exceed static_power for every BS")
        if np.any(self.d_max <= 0):
            raise ConfigurationError("d_max must be positive")

    @property
    def coverage_matrix(self) -> np.ndarray:
        """Boolean (n_regions, n_bs) incidence matrix of the coverage sets."""
        cov = np.zeros((self.n_regions, self.n_bs), dtype=bool)
        for m, bset in enumerate(self.coverage):
            cov[m, list(bset)] = True
        cov.setflags(write=False)
        return cov


@dataclass(frozen=True)
class ServiceCatalog:
    """Per-service storage footprint (GB) and mean task workload (Gcycles)."""

    storage: np.ndarray
    workload: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "storage", _freeze(self.storage))
        object.__setattr__(self, "workload", _freeze(self.workload))
        if self.storage.ndim != 1 or self.storage.shape != self.workload.shape:
            raise ConfigurationError("storage and workload must be 1-D and equally sized")
        if np.any(self.storage <= 0) or np.any(self.workload <= 0):
            raise ConfigurationError("storage and workload must be positive")

    @property
    def n_services(self) -> int:
        return self.storage.shape[0]

    def check_fits(self, net: NetworkModel):
        """Every BS must be able to cache at least the smallest service."""
        if self.storage.min() > net.storage_cap.min():
            raise ConfigurationError("smallest service does not fit in the smallest BS")


@dataclass(frozen=True)
class SlotState:
    """Stochastic inputs of one time slot.

    demand has shape (n_services, n_regions): Poisson task rate per service
    per region. cloud_delay is the per-task delay (seconds) for tasks sent
    to the remote cloud. aux_energy is the per-BS load-independent energy
    draw of the slot.
    """

    demand: np.ndarray
    cloud_delay: float
    aux_energy: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "demand", _freeze(self.demand))
        object.__setattr__(self, "aux_energy", _freeze(self.aux_energy))
        if not np.all(np.isfinite(self.demand)) or np.any(self.demand < 0):
            raise ConfigurationError("demand must be finite and non-negative")
        if not np.all(np.isfinite(self.aux_energy)) or np.any(self.aux_energy < 0):
            raise ConfigurationError("aux_energy must be finite and non-negative")
        if not (self.cloud_delay > 0 and np.isfinite(self.cloud_delay)):
            raise ConfigurationError("cloud_delay must be positive and finite")


@dataclass(frozen=True)
class Decision:
    """One slot's joint decision: cache[n, k] in {0,1} and offload[n] in [0,1]."""

    cache: np.ndarray
    offload: np.ndarray

    def __post_init__(self):
        cache = np.asarray(self.cache)
        if not np.isin(cache, (0, 1)).all():
            raise ConfigurationError("cache entries must be 0 or 1")
        cache = cache.astype(np.int8)
        cache.setflags(write=False)
        object.__setattr__(self, "cache", cache)
        object.__setattr__(self, "offload", _freeze(self.offload))
        if np.any(self.offload < 0) or np.any(self.offload > 1):
            raise ConfigurationError("offload fractions must lie in [0, 1]")

    @staticmethod
    def zeros(n_bs: int, n_services: int) -> "Decision":
        return Decision(np.zeros((n_bs, n_services), dtype=np.int8),
                        np.zeros(n_bs))


@dataclass(frozen=True)
class ArrivalProfile:
    """Per-BS arrival rates induced by a caching matrix.

    uncovered is the total task rate whose region has no covering BS with
    the service cached; those tasks go to the cloud regardless of offload
    decisions.
    """

    rates: np.ndarray      # lambda[n, k]
    totals: np.ndarray     # lambda[n]
    uncovered: float

    def __post_init__(self):
        object.__setattr__(self, "rates", _freeze(self.rates))
        object.__setattr__(self, "totals", _freeze(self.totals))


@dataclass(frozen=True)
class FeasibilityReport:
    feasible: bool
    violations: tuple[tuple[int, str], ...] = ()

    def __bool__(self) -> bool:
        return self.feasible


def validate_decision(net: NetworkModel, cat: ServiceCatalog,
                      dec: Decision) -> FeasibilityReport:
    """Check storage capacity and offload-fraction bounds for every BS."""
    if dec.cache.shape != (net.n_bs, cat.n_services):
        raise ValueError(f"cache shape {dec.cache.shape} does not match "
                         f"({net.n_bs}, {cat.n_services})")
    if dec.offload.shape != (net.n_bs,):
        raise ValueError(f"offload shape {dec.offload.shape} does not match ({net.n_bs},)")
    violations = []
    used = dec.cache @ cat.storage
    for n in range(net.n_bs):
        if used[n] > net.storage_cap[n]:
            violations.append((n, f"storage {used[n]:g} exceeds capacity {net.storage_cap[n]:g}"))
        if not (0.0 <= dec.offload[n] <= 1.0):
            violations.append((n, f"offload fraction {dec.offload[n]:g} outside [0, 1]"))
    return FeasibilityReport(not violations, tuple(violations))


def split_demand(net: NetworkModel, slot: SlotState,
                 cache: np.ndarray) -> ArrivalProfile:
    """Split regional demand evenly among covering BSs that cache the service.

    Regions where no covering BS caches service k contribute d[k, m] to the
    uncovered (cloud-bound) rate.
    """
    cache = np.asarray(cache)
    if cache.shape != (net.n_bs, slot.demand.shape[0]):
        raise ValueError(f"cache shape {cache.shape} does not match "
                         f"({net.n_bs}, {slot.demand.shape[0]})")
    cov = net.coverage_matrix                        # (M, N)
    dmat = slot.demand.T                             # (M, K)
    counts = cov.astype(np.int64) @ cache            # |A_{m,k}|
    covered = counts > 0
    share = np.where(covered, dmat / np.maximum(counts, 1), 0.0)
    rates = (cov.T.astype(float) @ share) * cache    # zero where not cached
    uncovered = float(dmat[~covered].sum())
    return ArrivalProfile(rates=rates, totals=rates.sum(axis=1),
                          uncovered=uncovered)


@dataclass(frozen=True)
class SlotRanges:
    """Uniform ranges from which a slot's stochastic inputs are drawn."""

    demand: tuple[float, float] = (0.0, 12.0)
    cloud_delay: tuple[float, float] = (2.0, 4.0)
    aux_energy: tuple[float, float] = (0.0, 3.0)

    def __post_init__(self):
        for name in ("demand", "cloud_delay", "aux_energy"):
            lo, hi = getattr(self, name)
            if not (np.isfinite(lo) and np.isfinite(hi) and lo <= hi):
                raise ConfigurationError(f"{name} range must satisfy lo <= hi")


def sample_slot(rng: np.random.Generator, net: NetworkModel,
                ranges: SlotRanges = SlotRanges()) -> SlotState:
    """Draw one slot's demand matrix, cloud delay and auxiliary energy."""
    d = rng.uniform(*ranges.demand, size=(net.n_services, net.n_regions))
    h = float(rng.uniform(*ranges.cloud_delay))
    aux = rng.uniform(*ranges.aux_energy, size=net.n_bs)
    return SlotState(demand=d, cloud_delay=max(h, np.finfo(float).tiny),
                     aux_energy=aux)


def _grid_points(side_m: float, rows: int, cols: int) -> np.ndarray:
    xs = (np.arange(cols) + 0.5) * side_m / cols
    ys = (np.arange(rows) + 0.5) * side_m / rows
    gx, gy = np.meshgrid(xs, ys)
    return np.column_stack([gx.ravel(), gy.ravel()])


def build_grid_scenario(side_m: float = 500.0,
                        bs_grid: tuple[int, int] = (3, 3),
                        region_grid: tuple[int, int] = (5, 5),
                        radius_m: float = 150.0,
                        n_services: int = 10,
                        storage_cap: float = 200.0,
                        cpu_freq: float = 10.0,
                        static_power: float = 0.5,
                        unit_energy: float = 1.0,
                        e_max: float = 15.0,
                        d_max: float = 5000.0) -> NetworkModel:
    """Regular grid of BSs over a square area with a grid of demand regions.

    Region m is covered by BS n iff the distance between the region centroid
    and the BS position is at most radius_m.
    """
    if radius_m <= 0:
        raise ConfigurationError("radius_m must be positive")
    if min(bs_grid) < 1 or min(region_grid) < 1:
        raise ConfigurationError("grid dimensions must be >= 1")
    bs_pos = _grid_points(side_m, *bs_grid)
    reg_pos = _grid_points(side_m, *region_grid)
    dist = np.linalg.norm(reg_pos[:, None, :] - bs_pos[None, :, :], axis=2)
    coverage = [frozenset(np.flatnonzero(dist[m] <= radius_m).tolist())
                for m in range(len(reg_pos))]
    n_bs = len(bs_pos)
    ones = np.ones(n_bs)
    return NetworkModel(
        n_bs=n_bs, n_regions=len(reg_pos), n_services=n_services,
        coverage=tuple(coverage),
        storage_cap=ones * storage_cap, cpu_freq=ones * cpu_freq,
        static_power=ones * static_power, unit_energy=ones * unit_energy,
        e_max=ones * e_max, d_max=ones * d_max)

"""Scenario files: a YAML schema describing geometry, service catalog ranges,
per-BS parameters, demand ranges and controller knobs, with defaults matching
the standard dense-grid setup (500m x 500m, 3x3 BSs, 5x5 regions, 10
services).

Seed-splitting rule: a scenario's master seed expands into independent
substreams via numpy SeedSequence spawn keys:

    (0,)                      -> service catalog draw
    (1, sweep_idx, rep)       -> demand/slot stream
    (2, sweep_idx, rep, t)    -> sampler seed for slot t

The demand stream and the sampler stream depend only on the sweep point and
replication, never on the scheme, so all schemes face identical randomness
within a sweep point (paired comparison).
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator

import numpy as np
import yaml

from .gibbs import SamplerConfig
from .model import (ConfigurationError, NetworkModel, ServiceCatalog,
                    SlotRanges, SlotState, build_grid_scenario, sample_slot)

_CATALOG_KEY = 0
_DEMAND_KEY = 1
_SAMPLER_KEY = 2


@dataclass
class Scenario:
    seed: int = 1
    # geometry
    side_m: float = 500.0
    bs_grid: tuple[int, int] = (3, 3)
    region_grid: tuple[int, int] = (5, 5)
    radius_m: float = 150.0
    # services
    n_services: int = 10
    service_storage_range: tuple[float, float] = (20.0, 100.0)
    service_workload_range: tuple[float, float] = (0.1, 0.5)
    # per-BS parameters
    storage_cap: float = 200.0
    cpu_freq: float = 10.0
    static_power: float = 0.5
    unit_energy: float = 1.0
    e_max: float = 15.0
    d_max: float = 5000.0
    # per-slot stochastic inputs
    demand_range: tuple[float, float] = (0.0, 12.0)
    cloud_delay_range: tuple[float, float] = (2.0, 4.0)
    aux_energy_range: tuple[float, float] = (0.0, 3.0)
    # controller knobs
    v_weight: float = 50.0
    energy_budget: float = 50.0
    tau: float = 1e-2
    # sampler knobs
    sampler_max_iters: int | None = None
    sampler_patience: int | None = None
    sampler_stall_limit: int | None = 200
    sampler_proposal: str = "uniform"
    sampler_parallel: bool = False

    def build_network(self) -> NetworkModel:
        return build_grid_scenario(
            side_m=self.side_m, bs_grid=self.bs_grid,
            region_grid=self.region_grid, radius_m=self.radius_m,
            n_services=self.n_services, storage_cap=self.storage_cap,
            cpu_freq=self.cpu_freq, static_power=self.static_power,
            unit_energy=self.unit_energy, e_max=self.e_max, d_max=self.d_max)

    def build_catalog(self) -> ServiceCatalog:
        rng = np.random.default_rng(
            np.random.SeedSequence(self.seed, spawn_key=(_CATALOG_KEY,)))
        storage = rng.uniform(*self.service_storage_range, size=self.n_services)
        workload = rng.uniform(*self.service_workload_range, size=self.n_services)
        cat = ServiceCatalog(storage=storage, workload=workload)
        cat.check_fits(self.build_network())
        return cat

    def slot_ranges(self) -> SlotRanges:
        return SlotRanges(demand=self.demand_range,
                          cloud_delay=self.cloud_delay_range,
                          aux_energy=self.aux_energy_range)

    def sampler_config(self, seed: int = 0, tau: float | None = None) -> SamplerConfig:
        return SamplerConfig(tau=self.tau if tau is None else tau,
                             max_iters=self.sampler_max_iters,
                             patience=self.sampler_patience,
                             stall_limit=self.sampler_stall_limit,
                             proposal=self.sampler_proposal,
                             parallel=self.sampler_parallel,
                             seed=seed)

    def slot_stream(self, net: NetworkModel, sweep_idx: int = 0,
                    rep: int = 0) -> Iterator[SlotState]:
        rng = np.random.default_rng(np.random.SeedSequence(
            self.seed, spawn_key=(_DEMAND_KEY, sweep_idx, rep)))
        ranges = self.slot_ranges()
        while True:
            yield sample_slot(rng, net, ranges)

    def sampler_seeds(self, sweep_idx: int = 0, rep: int = 0) -> Iterator[int]:
        t = 0
        while True:
            ss = np.random.SeedSequence(
                self.seed, spawn_key=(_SAMPLER_KEY, sweep_idx, rep, t))
            yield int(ss.generate_state(1)[0])
            t += 1


_TUPLE_FIELDS = {"bs_grid", "region_grid", "service_storage_range",
                 "service_workload_range", "demand_range",
                 "cloud_delay_range", "aux_energy_range"}


def load_scenario(path: str | Path) -> Scenario:
    raw = yaml.safe_load(Path(path).read_text())
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigurationError(f"scenario file {path} must hold a mapping")
    known = {f.name for f in dataclasses.fields(Scenario)}
    unknown = set(raw) - known
    if unknown:
        raise ConfigurationError(f"unknown scenario keys: {sorted(unknown)}")
    for key in _TUPLE_FIELDS & set(raw):
        raw[key] = tuple(raw[key])
    return Scenario(**raw)


def save_scenario(scenario: Scenario, path: str | Path):
    data = dataclasses.asdict(scenario)
    for key in _TUPLE_FIELDS:
        data[key] = list(data[key])
    Path(path).write_text(yaml.safe_dump(data, sort_keys=False))

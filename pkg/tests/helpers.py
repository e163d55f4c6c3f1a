"""Shared builders for small hand-crafted and random test instances."""

import numpy as np

from edgecache import NetworkModel, ServiceCatalog, SlotState, split_demand
from edgecache.cost import EPS_STAB


def build_net(coverage, n_services, storage_cap=200.0, cpu_freq=10.0,
              static_power=0.5, unit_energy=1.0, e_max=1e6, d_max=1e12,
              n_bs=None):
    """NetworkModel from explicit coverage sets; scalar params broadcast."""
    if n_bs is None:
        n_bs = 1 + max(b for s in coverage for b in s)

    def arr(x):
        return np.full(n_bs, float(x)) if np.isscalar(x) else np.asarray(x, float)

    return NetworkModel(
        n_bs=n_bs, n_regions=len(coverage), n_services=n_services,
        coverage=tuple(frozenset(s) for s in coverage),
        storage_cap=arr(storage_cap), cpu_freq=arr(cpu_freq),
        static_power=arr(static_power), unit_energy=arr(unit_energy),
        e_max=arr(e_max), d_max=arr(d_max))


def make_slot(demand, cloud_delay=3.0, aux=0.0, n_bs=1):
    demand = np.atleast_2d(np.asarray(demand, dtype=float))
    if np.isscalar(aux):
        aux = np.full(n_bs, float(aux))
    return SlotState(demand=demand, cloud_delay=float(cloud_delay),
                     aux_energy=np.asarray(aux, dtype=float))


def random_instance(rng, n_bs=2, n_services=2, n_regions=3, demand_hi=8.0,
                    tight_storage=True, e_max=1e6, d_max=1e12):
    """Random small instance: coverage, catalog, slot.

    tight_storage draws a capacity between the smallest service and the sum
    of all services, so the caching knapsack actually binds sometimes.
    """
    coverage = []
    for _ in range(n_regions):
        size = int(rng.integers(1, n_bs + 1))
        coverage.append(frozenset(
            int(b) for b in rng.choice(n_bs, size=size, replace=False)))
    storage = rng.uniform(20.0, 100.0, n_services)
    workload = rng.uniform(0.1, 0.5, n_services)
    if tight_storage:
        cap = float(rng.uniform(storage.min(), storage.sum()))
    else:
        cap = float(storage.sum()) * 1.01
    net = build_net(coverage, n_services, storage_cap=cap, n_bs=n_bs,
                    e_max=e_max, d_max=d_max)
    cat = ServiceCatalog(storage=storage, workload=workload)
    demand = rng.uniform(0.0, demand_hi, (n_services, n_regions))
    slot = make_slot(demand, cloud_delay=float(rng.uniform(2.0, 4.0)),
                     aux=rng.uniform(0.0, 3.0, n_bs))
    return net, cat, slot


def grid_objective(net, cat, slot, cache, v_weight, q_backlog, step=1e-5):
    """Independent dense grid search over each BS's offload fraction."""
    arrivals = split_demand(net, slot, cache)
    mu = cat.workload
    h = slot.cloud_delay
    d_total = h * arrivals.uncovered
    e_total = float(slot.aux_energy.sum())
    b_best = np.zeros(net.n_bs)
    for n in range(net.n_bs):
        lam = arrivals.totals[n]
        gamma, kappa, f = net.static_power[n], net.unit_energy[n], net.cpu_freq[n]
        if lam <= 0:
            e_total += gamma
            continue
        w = float(arrivals.rates[n] @ mu)
        v = float(arrivals.rates[n] @ (2 * mu * mu))
        hi = 1.0
        if w > 0:
            hi = min(hi, (1 - EPS_STAB) * f / w)
            head = net.e_max[n] - gamma - slot.aux_energy[n]
            if kappa * w > 0:
                hi = min(hi, head / (kappa * w))
        b = np.linspace(0.0, max(hi, 0.0), int(max(hi, 0.0) / step) + 2)
        delay = b * w / f + (b * b * lam * v) / (2 * f * (f - b * w)) \
            + (1 - b) * lam * h
        energy = gamma + kappa * b * w
        g = np.where(delay <= net.d_max[n],
                     v_weight * delay + q_backlog * energy, np.inf)
        i = int(np.argmin(g))
        b_best[n] = b[i]
        d_total += delay[i]
        e_total += energy[i]
    return v_weight * d_total + q_backlog * e_total, b_best


def random_feasible_cache(rng, net, cat):
    """Uniformly random storage-feasible caching matrix (rejection per row)."""
    cache = np.zeros((net.n_bs, cat.n_services), dtype=np.int8)
    for n in range(net.n_bs):
        while True:
            row = (rng.random(cat.n_services) < 0.5).astype(np.int8)
            if row @ cat.storage <= net.storage_cap[n]:
                cache[n] = row
                break
    return cache

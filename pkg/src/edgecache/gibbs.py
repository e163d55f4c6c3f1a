"""Decentralized Gibbs-sampling search over caching matrices.

Each iteration a randomly chosen BS proposes a new cache row, the offload
vector is re-solved only for the BSs whose arrival rates can change (the
proposer and its coverage neighbors), and the proposal is kept with the
logistic probability 1/(1 + exp((f_new - f_old)/tau)). Simultaneous updates
of BSs with pairwise disjoint closed neighborhoods are supported.

The execution is simulated in one process, but every evaluation touches only
neighborhood-local state, and the number of neighbor broadcasts is recorded
to track the communication cost a real deployment would pay.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .cost import EPS_STAB
from .model import Decision, NetworkModel, ServiceCatalog, SlotState
from .offload import B_TOL, SlotInfeasibleError


class StateSpaceTooLargeError(RuntimeError):
    """Exhaustive enumeration would exceed the configured guard."""


# ---------------------------------------------------------------------------
# neighbor structure


@dataclass(frozen=True)
class NeighborGraph:
    """neighbors[n] is the set of BSs whose costs BS n's cache can affect."""

    neighbors: tuple[frozenset[int], ...]

    def __post_init__(self):
        for n, nb in enumerate(self.neighbors):
            if n in nb:
                raise ValueError(f"neighbor set of BS {n} must be irreflexive")
            for other in nb:
                if n not in self.neighbors[other]:
                    raise ValueError(f"neighbor relation {n}<->{other} not symmetric")

    @staticmethod
    def from_coverage(net: NetworkModel) -> "NeighborGraph":
        sets = [set() for _ in range(net.n_bs)]
        for bset in net.coverage:
            for a in bset:
                for b in bset:
                    if a != b:
                        sets[a].add(b)
        return NeighborGraph(tuple(frozenset(s) for s in sets))

    @staticmethod
    def from_positions(positions: np.ndarray, max_dist: float) -> "NeighborGraph":
        pos = np.asarray(positions, dtype=float)
        dist = np.linalg.norm(pos[:, None, :] - pos[None, :, :], axis=2)
        sets = []
        for n in range(len(pos)):
            close = set(np.flatnonzero(dist[n] <= max_dist).tolist())
            close.discard(n)
            sets.append(frozenset(close))
        return NeighborGraph(tuple(sets))

    def closed(self, n: int) -> frozenset[int]:
        return self.neighbors[n] | {n}


# ---------------------------------------------------------------------------
# configuration and trace


@dataclass
class SamplerConfig:
    """Knobs of one sampler run.

    max_iters defaults to 60*N*K and patience (consecutive accepted states
    that do not improve the best objective) to 10*N. stall_limit stops the
    run after that many iterations without any best-objective improvement;
    None disables it.
    """

    tau: float = 1e-2
    max_iters: int | None = None
    patience: int | None = None
    stall_limit: int | None = None
    proposal: str = "uniform"          # "uniform" | "flip"
    parallel: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.tau <= 0:
            raise ValueError("tau must be positive")
        if self.max_iters is not None and self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.proposal not in ("uniform", "flip"):
            raise ValueError(f"unknown proposal mode {self.proposal!r}")

    def resolved(self, n_bs: int, n_services: int) -> tuple[int, int | None, int | None]:
        iters = self.max_iters if self.max_iters is not None else 60 * n_bs * n_services
        pat = self.patience if self.patience is not None else 10 * n_bs
        return iters, pat, self.stall_limit


@dataclass
class SamplerTrace:
    iterations: list[int] = field(default_factory=list)
    bs: list[int] = field(default_factory=list)
    current_f: list[float] = field(default_factory=list)
    best_f: list[float] = field(default_factory=list)
    accepted: list[bool] = field(default_factory=list)
    messages: int = 0
    stop_reason: str = ""

    def record(self, it: int, bs: int, cur: float, best: float, acc: bool):
        self.iterations.append(it)
        self.bs.append(bs)
        self.current_f.append(cur)
        self.best_f.append(best)
        self.accepted.append(acc)

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["iteration", "bs", "current_f", "best_f", "accepted"])
            for row in zip(self.iterations, self.bs, self.current_f,
                           self.best_f, self.accepted):
                writer.writerow([row[0], row[1], repr(row[2]), repr(row[3]), int(row[4])])


# ---------------------------------------------------------------------------
# proposals


def feasible_rows(capacity: float, storage: np.ndarray,
                  max_services: int = 20) -> np.ndarray:
    """All storage-feasible cache rows, ordered by bitmask value (empty first)."""
    k = len(storage)
    if k > max_services:
        raise StateSpaceTooLargeError(f"cannot enumerate 2^{k} cache rows")
    rows = []
    for mask in range(1 << k):
        row = np.array([(mask >> j) & 1 for j in range(k)], dtype=np.int8)
        if float(row @ storage) <= capacity:
            rows.append(row)
    return np.array(rows, dtype=np.int8)


class _ProposalSampler:
    """Uniform sampling over the storage-feasible rows of each BS.

    Uses rejection sampling over uniform bitstrings, switching to explicit
    enumeration for a BS once rejection gets wasteful (only possible for
    K <= 20).
    """

    REJECT_SWITCH = 64

    def __init__(self, net: NetworkModel, cat: ServiceCatalog):
        self.storage = cat.storage
        self.caps = net.storage_cap
        self.k = cat.n_services
        self._enumerated: dict[int, np.ndarray] = {}

    def uniform(self, rng: np.random.Generator, n: int) -> np.ndarray:
        if n in self._enumerated:
            rows = self._enumerated[n]
            return rows[rng.integers(len(rows))].copy()
        for _ in range(self.REJECT_SWITCH):
            row = (rng.random(self.k) < 0.5).astype(np.int8)
            if float(row @ self.storage) <= self.caps[n]:
                return row
        if self.k <= 20:
            self._enumerated[n] = feasible_rows(self.caps[n], self.storage)
            return self.uniform(rng, n)
        # degenerate capacity with unenumerable K: fall back to the empty row
        return np.zeros(self.k, dtype=np.int8)

    def flip(self, rng: np.random.Generator, n: int,
             current: np.ndarray) -> np.ndarray | None:
        row = current.astype(np.int8).copy()
        j = int(rng.integers(self.k))
        row[j] ^= 1
        if float(row @ self.storage) > self.caps[n]:
            return None
        return row


def propose(rng: np.random.Generator, net: NetworkModel, cat: ServiceCatalog,
            n: int, mode: str = "uniform",
            current: np.ndarray | None = None) -> np.ndarray | None:
    """Draw a candidate cache row for BS n; None means the draw was infeasible
    (flip mode only) and the iteration is consumed without a candidate."""
    sampler = _ProposalSampler(net, cat)
    if mode == "uniform":
        return sampler.uniform(rng, n)
    if mode == "flip":
        if current is None:
            raise ValueError("flip mode requires the current row")
        return sampler.flip(rng, n, current)
    raise ValueError(f"unknown proposal mode {mode!r}")


def accept_probability(f_new: float, f_old: float, tau: float) -> float:
    """Logistic acceptance probability, clamped against overflow."""
    if tau <= 0:
        raise ValueError("tau must be positive")
    if math.isinf(f_old) and math.isinf(f_new):
        return 0.5
    x = (f_new - f_old) / tau
    x = max(min(x, 700.0), -700.0)
    return 1.0 / (1.0 + math.exp(x))


# ---------------------------------------------------------------------------
# incremental slot evaluation


class _State:
    __slots__ = ("cache", "cnt", "share", "lam", "b", "dcost", "energy",
                 "uncovered", "f")


class _Candidate:
    __slots__ = ("n", "row", "reg", "cnt_rows", "share_rows", "nbhd",
                 "lam_rows", "b", "dcost", "energy", "uncovered", "f")


class SlotEvaluator:
    """Neighborhood-local evaluation of P2's objective for one slot.

    energy_budget, when set, additionally caps each BS's per-slot energy
    headroom at an equal share of (budget - sum of static and auxiliary
    energy); used by the myopic baseline to enforce a hard per-slot total.
    """

    def __init__(self, net: NetworkModel, cat: ServiceCatalog, slot: SlotState,
                 v_weight: float, q_backlog: float,
                 graph: NeighborGraph | None = None,
                 energy_budget: float | None = None):
        if v_weight < 0 or q_backlog < 0:
            raise ValueError("weights must be non-negative")
        self.net = net
        self.cat = cat
        self.slot = slot
        self.v_weight = float(v_weight)
        self.q_backlog = float(q_backlog)
        self.graph = graph or NeighborGraph.from_coverage(net)
        self.cov = net.coverage_matrix
        self.covf = self.cov.astype(float)
        self.dmat = slot.demand.T.copy()           # (M, K)
        self.mu = cat.workload
        self.mu2 = 2.0 * self.mu * self.mu
        self.aux_sum = float(slot.aux_energy.sum())
        self.h = float(slot.cloud_delay)
        e_head = net.e_max - net.static_power - slot.aux_energy
        if energy_budget is not None:
            free = energy_budget - float(net.static_power.sum()) - self.aux_sum
            if free < 0:
                raise SlotInfeasibleError(-1, "per-slot energy budget below static draw")
            e_head = np.minimum(e_head, free / net.n_bs)
        self.e_head = e_head
        self.regions_of = [np.flatnonzero(self.cov[:, n]) for n in range(net.n_bs)]
        self.closed_nbhd = [np.array(sorted(self.graph.closed(n)), dtype=np.int64)
                            for n in range(net.n_bs)]

    # -- full evaluation ----------------------------------------------------

    def full_eval(self, cache: np.ndarray) -> _State:
        st = _State()
        st.cache = np.asarray(cache, dtype=np.int8).copy()
        st.cnt = self.cov.astype(np.int64) @ st.cache
        covered = st.cnt > 0
        st.share = np.where(covered, self.dmat / np.maximum(st.cnt, 1), 0.0)
        st.lam = (self.covf.T @ st.share) * st.cache
        st.uncovered = float(self.dmat[~covered].sum())
        n = self.net.n_bs
        st.b = np.zeros(n)
        st.dcost = np.zeros(n)
        st.energy = np.zeros(n)
        bad = self._solve(np.arange(n, dtype=np.int64), st.lam, st.b,
                          st.dcost, st.energy)
        if bad >= 0:
            raise SlotInfeasibleError(int(bad))
        st.f = self._objective(st.dcost, st.energy, st.uncovered)
        return st

    def _solve(self, idx, lam, b_out, d_out, e_out) -> int:
        net = self.net
        lam_tot = lam.sum(axis=1)
        w = lam @ self.mu
        v = lam @ self.mu2
        return kernels.solve_many(idx, lam_tot, w, v, net.cpu_freq,
                                  net.unit_energy, net.static_power, self.h,
                                  self.v_weight, self.q_backlog, self.e_head,
                                  net.d_max, EPS_STAB, B_TOL, b_out, d_out, e_out)

    def _objective(self, dcost, energy, uncovered) -> float:
        d_hat = float(dcost.sum()) + self.h * uncovered
        e_hat = float(energy.sum()) + self.aux_sum
        return self.v_weight * d_hat + self.q_backlog * e_hat

    # -- neighborhood-local candidate evaluation ----------------------------

    def candidate(self, st: _State, n: int, row: np.ndarray) -> _Candidate | None:
        """Objective after replacing BS n's row, touching only n's regions
        and closed neighborhood. Returns None when the neighborhood has no
        feasible offload under the per-slot caps."""
        cand = _Candidate()
        cand.n = n
        cand.row = np.asarray(row, dtype=np.int8).copy()
        reg = self.regions_of[n]
        cand.reg = reg
        delta = cand.row.astype(np.int64) - st.cache[n].astype(np.int64)
        cnt_old = st.cnt[reg]
        cnt_new = cnt_old + delta[None, :]
        covered_new = cnt_new > 0
        dm = self.dmat[reg]
        share_new = np.where(covered_new, dm / np.maximum(cnt_new, 1), 0.0)
        cand.cnt_rows = cnt_new
        cand.share_rows = share_new
        cand.uncovered = (st.uncovered
                          - float(dm[cnt_old == 0].sum())
                          + float(dm[~covered_new].sum()))

        nbhd = self.closed_nbhd[n]
        cand.nbhd = nbhd
        pos_n = int(np.searchsorted(nbhd, n))
        cov_rn = self.covf[np.ix_(reg, nbhd)]
        a_old = st.cache[nbhd].astype(float)
        a_new = a_old.copy()
        a_new[pos_n] = cand.row
        base_old = cov_rn.T @ st.share[reg]
        base_new = cov_rn.T @ share_new
        lam_rows = st.lam[nbhd] - a_old * base_old + a_new * base_new
        np.maximum(lam_rows, 0.0, out=lam_rows)
        cand.lam_rows = lam_rows

        lam_full = st.lam.copy()
        lam_full[nbhd] = lam_rows
        cand.b = st.b.copy()
        cand.dcost = st.dcost.copy()
        cand.energy = st.energy.copy()
        bad = self._solve(nbhd, lam_full, cand.b, cand.dcost, cand.energy)
        if bad >= 0:
            return None
        cand.f = self._objective(cand.dcost, cand.energy, cand.uncovered)
        return cand

    def commit(self, st: _State, cand: _Candidate):
        st.cache[cand.n] = cand.row
        st.cnt[cand.reg] = cand.cnt_rows
        st.share[cand.reg] = cand.share_rows
        st.lam[cand.nbhd] = cand.lam_rows
        st.b = cand.b
        st.dcost = cand.dcost
        st.energy = cand.energy
        st.uncovered = cand.uncovered
        st.f = cand.f


def local_objective_delta(net: NetworkModel, cat: ServiceCatalog,
                          slot: SlotState, dec: Decision, n: int,
                          candidate_row: np.ndarray, v_weight: float,
                          q_backlog: float) -> tuple[float, np.ndarray]:
    """Objective after BS n switches to candidate_row, recomputed via the
    neighborhood-restricted update. Offload fractions are re-solved (the
    provided dec.offload is not reused); returns (f_new, new offload vector).
    """
    ev = SlotEvaluator(net, cat, slot, v_weight, q_backlog)
    st = ev.full_eval(dec.cache)
    cand = ev.candidate(st, n, candidate_row)
    if cand is None:
        raise SlotInfeasibleError(n, "candidate row infeasible under per-slot caps")
    return cand.f, cand.b


# ---------------------------------------------------------------------------
# the sampler


def _independent_set(rng: np.random.Generator, graph: NeighborGraph,
                     n_bs: int) -> list[int]:
    """Random maximal set of BSs with pairwise disjoint closed neighborhoods."""
    order = rng.permutation(n_bs)
    taken: set[int] = set()
    chosen = []
    for n in order:
        closed = graph.closed(int(n))
        if closed & taken:
            continue
        chosen.append(int(n))
        taken |= closed
    return chosen


def run_sampler(net: NetworkModel, cat: ServiceCatalog, slot: SlotState,
                v_weight: float, q_backlog: float,
                cfg: SamplerConfig) -> tuple[Decision, SamplerTrace]:
    """Search caching matrices for one slot; returns the best feasible
    decision visited and the per-iteration trace."""
    rng = np.random.default_rng(cfg.seed)
    ev = SlotEvaluator(net, cat, slot, v_weight, q_backlog)
    return _run_on_evaluator(ev, cfg, rng)


def _run_on_evaluator(ev: SlotEvaluator, cfg: SamplerConfig,
                      rng: np.random.Generator) -> tuple[Decision, SamplerTrace]:
    net, cat = ev.net, ev.cat
    n_bs, n_svc = net.n_bs, cat.n_services
    max_iters, patience, stall_limit = cfg.resolved(n_bs, n_svc)
    proposals = _ProposalSampler(net, cat)

    state = ev.full_eval(np.zeros((n_bs, n_svc), dtype=np.int8))
    f_chain = math.inf                     # the chain starts "uninitialized"
    best_f = state.f
    best_cache = state.cache.copy()
    best_b = state.b.copy()

    trace = SamplerTrace()
    memo: dict[bytes, tuple[float, bool]] = {}
    pat_count = 0
    stall_count = 0
    stop = ""

    it = 0
    while it < max_iters and not stop:
        if cfg.parallel:
            selected = _independent_set(rng, ev.graph, n_bs)
        else:
            selected = [int(rng.integers(n_bs))]
        improved = False
        for n in selected:
            if cfg.proposal == "uniform":
                row = proposals.uniform(rng, n)
            else:
                row = proposals.flip(rng, n, state.cache[n])
            if row is None:
                trace.record(it, n, state.f, best_f, False)
                continue

            cand_key = _candidate_key(state.cache, n, row)
            cached = memo.get(cand_key)
            if cached is not None and not cached[1]:
                trace.record(it, n, state.f, best_f, False)
                trace.messages += len(ev.graph.neighbors[n])
                continue
            if cached is not None:
                f_new = cached[0]
            else:
                cand = ev.candidate(state, n, row)
                if cand is None:
                    memo[cand_key] = (math.inf, False)
                    trace.record(it, n, state.f, best_f, False)
                    trace.messages += len(ev.graph.neighbors[n])
                    continue
                f_new = cand.f
                memo[cand_key] = (f_new, True)

            eta = accept_probability(f_new, f_chain, cfg.tau)
            accepted = bool(rng.random() < eta)
            if accepted:
                if cached is not None:
                    cand = ev.candidate(state, n, row)
                    assert cand is not None
                ev.commit(state, cand)
                f_chain = state.f
                if state.f < best_f:
                    best_f = state.f
                    best_cache = state.cache.copy()
                    best_b = state.b.copy()
                    improved = True
                    pat_count = 0
                else:
                    pat_count += 1
            trace.record(it, n, state.f if accepted else f_new, best_f, accepted)
            trace.messages += len(ev.graph.neighbors[n])

        stall_count = 0 if improved else stall_count + 1
        it += 1
        if patience is not None and pat_count >= patience:
            stop = "patience"
        elif stall_limit is not None and stall_count >= stall_limit:
            stop = "stall"
    trace.stop_reason = stop or "max_iters"
    return Decision(cache=best_cache, offload=best_b), trace


def _candidate_key(cache: np.ndarray, n: int, row: np.ndarray) -> bytes:
    new = cache.copy()
    new[n] = row
    return new.tobytes()


# ---------------------------------------------------------------------------
# stationary-distribution diagnostic


@dataclass(frozen=True)
class StationaryCheck:
    tv_distance: float
    empirical: np.ndarray
    theoretical: np.ndarray
    objectives: np.ndarray


def stationary_distribution_check(net: NetworkModel, cat: ServiceCatalog,
                                  slot: SlotState, v_weight: float,
                                  q_backlog: float, tau: float,
                                  burn_in: int, samples: int,
                                  seed: int = 0,
                                  max_states: int = 100_000) -> StationaryCheck:
    """Run the raw chain (no best-tracking, no early stop) on a fully
    enumerated instance and compare its occupancy with the Boltzmann law
    exp(-f(S)/tau) over the per-slot-feasible joint states."""
    ev = SlotEvaluator(net, cat, slot, v_weight, q_backlog)
    row_sets = [feasible_rows(net.storage_cap[n], cat.storage)
                for n in range(net.n_bs)]
    sizes = np.array([len(r) for r in row_sets], dtype=np.int64)
    total = int(np.prod(sizes.astype(object)))
    if total > max_states:
        raise StateSpaceTooLargeError(f"{total} joint states exceed guard {max_states}")

    strides = np.ones(net.n_bs, dtype=np.int64)
    for n in range(net.n_bs - 2, -1, -1):
        strides[n] = strides[n + 1] * sizes[n + 1]

    f_flat = np.full(total, np.inf)
    idx = np.zeros(net.n_bs, dtype=np.int64)
    for flat in range(total):
        rem = flat
        for n in range(net.n_bs):
            idx[n] = rem // strides[n]
            rem %= strides[n]
        cache = np.stack([row_sets[n][idx[n]] for n in range(net.n_bs)])
        try:
            f_flat[flat] = ev.full_eval(cache).f
        except SlotInfeasibleError:
            pass
    if not np.isfinite(f_flat[0]):
        raise SlotInfeasibleError(-1, "all-empty caching state infeasible")

    counts = kernels.chain_occupancy(f_flat, strides, sizes, samples,
                                     burn_in, tau, seed)
    empirical = counts / counts.sum()
    feas = np.isfinite(f_flat)
    logits = -(f_flat[feas] - f_flat[feas].min()) / tau
    boltz = np.exp(logits)
    theoretical = np.zeros_like(f_flat)
    theoretical[feas] = boltz / boltz.sum()
    tv = 0.5 * float(np.abs(empirical - theoretical).sum())
    return StationaryCheck(tv_distance=tv, empirical=empirical,
                           theoretical=theoretical, objectives=f_flat)

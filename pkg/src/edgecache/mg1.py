"""Discrete-event M/G/1 oracle used to validate the analytic sojourn time.

Single FIFO server, Poisson arrivals, service sizes drawn from a mixture of
exponentials and served at a fixed CPU speed. Waiting times follow the
Lindley recursion, evaluated in vectorized form as the reflected random walk
W_i = C_i - min_{j<=i} C_j with C the cumulative sum of (service - gap).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class MG1SimConfig:
    arrival_rate: float                 # tasks/s
    mix_weights: tuple[float, ...]      # mixture component probabilities
    mix_means: tuple[float, ...]        # mean size per component, Gcycles
    cpu_freq: float                     # Gcycles/s
    n_tasks: int = 1_000_000
    seed: int = 0

    def __post_init__(self):
        if self.arrival_rate <= 0:
            raise ValueError("arrival_rate must be positive")
        if self.cpu_freq <= 0:
            raise ValueError("cpu_freq must be positive")
        if len(self.mix_weights) != len(self.mix_means) or not self.mix_weights:
            raise ValueError("mixture weights and means must align and be non-empty")
        if any(w < 0 for w in self.mix_weights) or sum(self.mix_weights) <= 0:
            raise ValueError("mixture weights must be non-negative, not all zero")
        if any(m <= 0 for m in self.mix_means):
            raise ValueError("mixture means must be positive")
        if self.n_tasks < 100_000:
            raise ValueError("need at least 1e5 tasks for a stable estimate")
        if self.utilization >= 1.0:
            raise ValueError(f"utilization {self.utilization:.3f} >= 1")

    @property
    def mean_size(self) -> float:
        w = np.asarray(self.mix_weights, dtype=float)
        return float((w / w.sum()) @ np.asarray(self.mix_means))

    @property
    def utilization(self) -> float:
        return self.arrival_rate * self.mean_size / self.cpu_freq


@dataclass(frozen=True)
class MG1Result:
    mean_sojourn: float
    ci_halfwidth: float        # ~95% batch-means confidence interval
    utilization: float
    n_tasks: int


def mg1_event_sim(cfg: MG1SimConfig) -> MG1Result:
    """Empirical mean sojourn time of the configured M/G/1 queue."""
    rng = np.random.default_rng(cfg.seed)
    n = cfg.n_tasks
    gaps = rng.exponential(1.0 / cfg.arrival_rate, size=n)
    w = np.asarray(cfg.mix_weights, dtype=float)
    comp = rng.choice(len(w), size=n, p=w / w.sum())
    sizes = rng.exponential(np.asarray(cfg.mix_means)[comp])
    service = sizes / cfg.cpu_freq

    # Lindley recursion as a reflected walk: W_0 = 0,
    # W_i = max(0, W_{i-1} + S_{i-1} - A_i)
    steps = service[:-1] - gaps[1:]
    walk = np.concatenate([[0.0], np.cumsum(steps)])
    waits = walk - np.minimum.accumulate(walk)
    sojourns = waits + service

    mean = float(sojourns.mean())
    n_batches = 50
    batches = sojourns[: (n // n_batches) * n_batches].reshape(n_batches, -1)
    batch_means = batches.mean(axis=1)
    ci = 1.96 * float(batch_means.std(ddof=1)) / np.sqrt(n_batches)
    return MG1Result(mean_sojourn=mean, ci_halfwidth=ci,
                     utilization=cfg.utilization, n_tasks=n)


def pk_sojourn(cfg: MG1SimConfig) -> float:
    """Analytic Pollaczek-Khinchine mean sojourn for the same configuration."""
    w = np.asarray(cfg.mix_weights, dtype=float)
    w = w / w.sum()
    means = np.asarray(cfg.mix_means)
    es = float(w @ means)
    es2 = float(w @ (2.0 * means * means))
    lam, f = cfg.arrival_rate, cfg.cpu_freq
    return es / f + lam * es2 / (2.0 * f * (f - lam * es))

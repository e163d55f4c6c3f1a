"""Event-driven single-server queue simulator vs the analytic formula."""

import numpy as np
import pytest

from edgecache import (MG1Result, MG1SimConfig, ServiceCatalog, mg1_event_sim,
                       pk_sojourn, sojourn_time)
from helpers import build_net


def _cfg(arrival_rate, weights, means, f=10.0, n_tasks=200_000, seed=0):
    return MG1SimConfig(arrival_rate=arrival_rate, mix_weights=tuple(weights),
                        mix_means=tuple(means), cpu_freq=f, n_tasks=n_tasks,
                        seed=seed)


class TestConfigValidation:
    def test_unstable_config_rejected(self):
        with pytest.raises(ValueError):
            _cfg(60.0, (1.0,), (0.2,))          # utilization 1.2

    def test_too_few_tasks_rejected(self):
        with pytest.raises(ValueError):
            _cfg(10.0, (1.0,), (0.2,), n_tasks=1000)

    def test_mixture_must_align(self):
        with pytest.raises(ValueError):
            _cfg(10.0, (0.5, 0.5), (0.2,))
        with pytest.raises(ValueError):
            _cfg(10.0, (0.0, 0.0), (0.2, 0.3))

    def test_utilization_property(self):
        cfg = _cfg(25.0, (1.0,), (0.2,))
        assert cfg.utilization == pytest.approx(0.5)
        assert cfg.mean_size == pytest.approx(0.2)


class TestAnalyticFormula:
    def test_pk_two_component_value(self):
        # weights (0.75, 0.25) over means (0.1, 0.5): E[s]=0.2, E[s^2]=0.14;
        # at rate 4 and f=10: T = 0.02 + 4*0.14/(2*10*(10-0.8))
        cfg = _cfg(4.0, (0.75, 0.25), (0.1, 0.5))
        expected = 0.02 + 4.0 * 0.14 / (2.0 * 10.0 * (10.0 - 0.8))
        assert pk_sojourn(cfg) == pytest.approx(expected, rel=1e-12)

    def test_pk_agrees_with_cost_module(self):
        rng = np.random.default_rng(0)
        net = build_net([{0}], n_services=1, cpu_freq=10.0)
        for _ in range(50):
            k = int(rng.integers(1, 4))
            weights = rng.uniform(0.1, 1.0, k)
            means = rng.uniform(0.05, 0.5, k)
            w = weights / weights.sum()
            es = float(w @ means)
            lam = float(rng.uniform(0.1, 0.9)) * 10.0 / es
            cfg = _cfg(lam, weights, means)
            es2 = float(w @ (2 * means ** 2))
            assert pk_sojourn(cfg) == pytest.approx(
                sojourn_time(net, 0, (es, es2, lam)), rel=1e-12)


class TestEventSimulator:
    def test_mm1_agreement(self):
        cfg = _cfg(25.0, (1.0,), (0.2,), n_tasks=400_000)
        result = mg1_event_sim(cfg)
        assert isinstance(result, MG1Result)
        assert result.utilization == pytest.approx(0.5)
        # closed form: 1/(f/mu - lam) = 0.04 s
        assert result.mean_sojourn == pytest.approx(0.04, rel=0.02)
        assert result.ci_halfwidth < 0.01

    def test_mixture_agreement_with_analytic(self):
        cfg = _cfg(20.0, (0.75, 0.25), (0.1, 0.5), n_tasks=400_000, seed=3)
        result = mg1_event_sim(cfg)
        assert result.mean_sojourn == pytest.approx(pk_sojourn(cfg), rel=0.03)

    def test_light_traffic_is_pure_service_time(self):
        cfg = _cfg(0.01, (1.0,), (0.3,), n_tasks=200_000)
        result = mg1_event_sim(cfg)
        assert result.mean_sojourn == pytest.approx(0.03, rel=0.02)

    def test_seed_determinism(self):
        cfg = _cfg(10.0, (0.5, 0.5), (0.1, 0.4), seed=11)
        assert mg1_event_sim(cfg) == mg1_event_sim(cfg)

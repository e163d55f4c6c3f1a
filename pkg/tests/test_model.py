"""Topology construction, decision validation and the demand split."""

import numpy as np
import pytest

from edgecache import (ConfigurationError, Decision, NetworkModel,
                       ServiceCatalog, SlotRanges, build_grid_scenario,
                       sample_slot, split_demand, validate_decision)
from helpers import build_net, make_slot


class TestGridScenario:
    def test_default_grid_geometry(self):
        net = build_grid_scenario()
        assert net.n_bs == 9
        assert net.n_regions == 25
        # hand-computed coverage for the regular 3x3 / 5x5 layout:
        # BSs at multiples of 500/3 offset by 250/3, regions at odd
        # multiples of 50. Corner region (50,50) only reaches BS 0
        # (distance ~47m); region (150,50) reaches BS 0 (~75m) and
        # BS 1 (~105m); the center region (250,250) only BS 4; the
        # inner region (150,150) reaches BSs 0,1,3,4 (94-142m).
        assert net.coverage[0] == frozenset({0})
        assert net.coverage[1] == frozenset({0, 1})
        assert net.coverage[2] == frozenset({1})
        assert net.coverage[6] == frozenset({0, 1, 3, 4})
        assert net.coverage[12] == frozenset({4})
        assert net.coverage[24] == frozenset({8})

    def test_single_bs_single_region(self):
        net = build_grid_scenario(bs_grid=(1, 1), region_grid=(1, 1))
        assert net.coverage == (frozenset({0}),)

    def test_radius_too_small_raises(self):
        with pytest.raises(ConfigurationError):
            build_grid_scenario(bs_grid=(1, 1), region_grid=(5, 5),
                                radius_m=10.0)

    def test_nonpositive_radius_rejected(self):
        with pytest.raises(ConfigurationError):
            build_grid_scenario(radius_m=0.0)


class TestNetworkInvariants:
    def test_empty_region_rejected(self):
        with pytest.raises(ConfigurationError):
            build_net([set(), {0}], n_services=1)

    def test_energy_cap_must_exceed_static_power(self):
        with pytest.raises(ConfigurationError):
            build_net([{0}], n_services=1, static_power=2.0, e_max=2.0)

    def test_coverage_matrix_matches_sets(self):
        net = build_net([{0}, {0, 1}], n_services=1)
        cov = net.coverage_matrix
        assert cov.shape == (2, 2)
        assert cov[0].tolist() == [True, False]
        assert cov[1].tolist() == [True, True]

    def test_arrays_are_frozen(self):
        net = build_net([{0}], n_services=1)
        with pytest.raises(ValueError):
            net.storage_cap[0] = 1.0


class TestCatalog:
    def test_positive_entries_required(self):
        with pytest.raises(ConfigurationError):
            ServiceCatalog(storage=[20.0, -1.0], workload=[0.1, 0.2])

    def test_check_fits(self):
        net = build_net([{0}], n_services=1, storage_cap=10.0)
        cat = ServiceCatalog(storage=[20.0], workload=[0.1])
        with pytest.raises(ConfigurationError):
            cat.check_fits(net)


class TestDecision:
    def test_cache_must_be_binary(self):
        with pytest.raises(ConfigurationError):
            Decision(cache=np.array([[0, 2]]), offload=np.array([0.5]))

    def test_offload_bounds(self):
        with pytest.raises(ConfigurationError):
            Decision(cache=np.array([[1]]), offload=np.array([1.5]))

    def test_zeros_constructor(self):
        dec = Decision.zeros(2, 3)
        assert dec.cache.shape == (2, 3)
        assert not dec.cache.any()
        assert not dec.offload.any()


class TestValidateDecision:
    def setup_method(self):
        self.net = build_net([{0}], n_services=2, storage_cap=200.0)

    def test_both_services_fit(self):
        cat = ServiceCatalog(storage=[20.0, 100.0], workload=[0.1, 0.5])
        dec = Decision(cache=np.array([[1, 1]]), offload=np.array([0.5]))
        assert validate_decision(self.net, cat, dec)

    def test_all_zero_cache_always_feasible(self):
        cat = ServiceCatalog(storage=[20.0, 100.0], workload=[0.1, 0.5])
        assert validate_decision(self.net, cat, Decision.zeros(1, 2))

    def test_storage_violation_reported(self):
        cat = ServiceCatalog(storage=[150.0, 100.0], workload=[0.1, 0.5])
        dec = Decision(cache=np.array([[1, 1]]), offload=np.array([0.0]))
        report = validate_decision(self.net, cat, dec)
        assert not report
        assert report.violations[0][0] == 0

    def test_dimension_mismatch(self):
        cat = ServiceCatalog(storage=[20.0], workload=[0.1])
        with pytest.raises(ValueError):
            validate_decision(self.net, cat, Decision.zeros(1, 3))


class TestSplitDemand:
    def test_symmetric_even_split(self):
        net = build_net([{0, 1}], n_services=1)
        slot = make_slot([[12.0]], n_bs=2)
        cache = np.ones((2, 1), dtype=np.int8)
        prof = split_demand(net, slot, cache)
        assert prof.rates[0, 0] == pytest.approx(6.0)
        assert prof.rates[1, 0] == pytest.approx(6.0)
        assert prof.uncovered == 0.0

    def test_uncovered_demand_goes_to_cloud(self):
        net = build_net([{0, 1}], n_services=1)
        slot = make_slot([[5.0]], n_bs=2)
        prof = split_demand(net, slot, np.zeros((2, 1), dtype=np.int8))
        assert not prof.rates.any()
        assert prof.uncovered == pytest.approx(5.0)

    def test_two_regions_single_cacher(self):
        # regions: first covered by BS0 only, second by both; only BS0
        # caches, so it absorbs 4 + 6 = 10 tasks/s.
        net = build_net([{0}, {0, 1}], n_services=1)
        slot = make_slot([[4.0, 6.0]], n_bs=2)
        cache = np.array([[1], [0]], dtype=np.int8)
        prof = split_demand(net, slot, cache)
        assert prof.rates[0, 0] == pytest.approx(10.0)
        assert prof.rates[1, 0] == 0.0
        assert prof.uncovered == 0.0

    def test_mass_conservation_random(self):
        rng = np.random.default_rng(7)
        net = build_net([{0, 1}, {1, 2}, {0, 2}, {1}], n_services=3)
        slot = make_slot(rng.uniform(0, 12, (3, 4)), n_bs=3)
        for _ in range(20):
            cache = (rng.random((3, 3)) < 0.5).astype(np.int8)
            prof = split_demand(net, slot, cache)
            total = prof.totals.sum() + prof.uncovered
            assert total == pytest.approx(slot.demand.sum(), rel=1e-9)

    def test_rate_zero_where_not_cached(self):
        rng = np.random.default_rng(8)
        net = build_net([{0, 1}, {1}], n_services=2)
        slot = make_slot(rng.uniform(0, 12, (2, 2)), n_bs=2)
        cache = np.array([[1, 0], [0, 1]], dtype=np.int8)
        prof = split_demand(net, slot, cache)
        assert (prof.rates[cache == 0] == 0).all()


class TestSampleSlot:
    def test_degenerate_ranges_are_point_masses(self):
        net = build_net([{0}], n_services=2)
        ranges = SlotRanges(demand=(5.0, 5.0), cloud_delay=(3.0, 3.0),
                            aux_energy=(1.0, 1.0))
        slot = sample_slot(np.random.default_rng(0), net, ranges)
        assert (slot.demand == 5.0).all()
        assert slot.cloud_delay == pytest.approx(3.0)
        assert (slot.aux_energy == 1.0).all()

    def test_default_ranges_respected(self):
        net = build_grid_scenario()
        slot = sample_slot(np.random.default_rng(1), net)
        assert slot.demand.shape == (10, 25)
        assert ((slot.demand >= 0) & (slot.demand <= 12)).all()
        assert 2.0 <= slot.cloud_delay <= 4.0
        assert ((slot.aux_energy >= 0) & (slot.aux_energy <= 3)).all()

    def test_seed_determinism(self):
        net = build_grid_scenario()
        a = sample_slot(np.random.default_rng(42), net)
        b = sample_slot(np.random.default_rng(42), net)
        assert np.array_equal(a.demand, b.demand)
        assert a.cloud_delay == b.cloud_delay
        assert np.array_equal(a.aux_energy, b.aux_energy)

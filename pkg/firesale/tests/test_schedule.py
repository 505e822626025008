"""
Tests for stress-test bound schedules
Closed-form and root-finding ladders, dominance of the simulated trajectory
"""

import math

import numpy as np
import pytest

from firesale.src.bounds.schedule import (
    bounded_liquidations,
    bounded_price,
    build_bound_schedule,
    decomposition_weights,
    exp_hitting_time,
)
from firesale.src.core.exceptions import NeverActivates, NotExponentialImpact
from firesale.src.core.model import AssetSpec, BankBook, Regulation
from firesale.src.core.scenario import Scenario
from firesale.src.demand.curves import DemandCurve, ExponentialDecay, LinearImpact
from firesale.src.scenarios.case_studies import two_asset_scenario
from firesale.src.simulator.integrator import simulate

# bound hitting times of firms 2.. for b = 0.7/M and b = 1/(M + 1e-8)
MID_IMPACT_BOUNDS = [0.0794, 0.1562, 0.2305, 0.3023, 0.3715, 0.4381, 0.5021, 0.5635, 0.6223,
                     0.6785, 0.7321, 0.7830, 0.8313, 0.8770, 0.9199, 0.9602, 0.9978]
HIGH_IMPACT_BOUNDS = [0.0782, 0.1525, 0.2231, 0.2899, 0.3529, 0.4120, 0.4673, 0.5187, 0.5662,
                      0.6099, 0.6496, 0.6853, 0.7172, 0.7450, 0.7689, 0.7888, 0.8046, 0.8164, 0.8242]

# per-bank fractions of the per-asset decomposition may trail the simulation by a few 1e-4
MULTI_ASSET_FRACTION_TOL = 1e-3


def _linear_scenario():
    curve = DemandCurve(ExponentialDecay(rate=0.2, freeze_at=1.0), LinearImpact(0.01))
    banks = (BankBook(x=0.0, s=(2.0,), p_bar=0.95), BankBook(x=0.0, s=(2.0,), p_bar=0.9))
    return Scenario(Regulation(0.1), banks, (AssetSpec(alpha=5.0, market_cap=40.0, demand=curve),), 1.0)


class TestTwentyBankBounds:
    """Bound schedule regression on the twenty-bank system"""

    def test_no_impact_bounds_are_exact(self, no_impact_system, no_impact_times):
        schedule = build_bound_schedule(no_impact_system)
        np.testing.assert_allclose(schedule.hitting_times(), no_impact_times(no_impact_system), atol=1e-12)

    def test_mid_impact(self, mid_impact_system):
        times = build_bound_schedule(mid_impact_system).hitting_times()
        assert times[0] == 0.0
        np.testing.assert_allclose(times[1:18], MID_IMPACT_BOUNDS, atol=1e-3)
        assert np.all(np.isinf(times[18:]))

    def test_high_impact(self, high_impact_system):
        times = build_bound_schedule(high_impact_system).hitting_times()
        np.testing.assert_allclose(times[1:], HIGH_IMPACT_BOUNDS, atol=1e-3)

    def test_bounds_lead_simulation(self, high_impact_system):
        schedule = build_bound_schedule(high_impact_system)
        traj = simulate(high_impact_system)
        bounds = schedule.hitting_times()
        for bank, tau in traj.hitting_times.items():
            assert bounds[bank] <= tau + 1e-9

    def test_bounded_price_below_simulated(self, high_impact_system):
        schedule = build_bound_schedule(high_impact_system)
        traj = simulate(high_impact_system)
        for t in (0.25, 0.5, 0.75, 1.0):
            assert bounded_price(schedule, t) <= traj.state_at(t).q[0] + 1e-9

    def test_ladder_quantities(self, mid_impact_system):
        ladder = build_bound_schedule(mid_impact_system).ladders[0]
        assert ladder.closed_form
        assert ladder.banks == tuple(range(20))
        assert ladder.kappa == pytest.approx(1.0)
        assert ladder.lam[0] == pytest.approx(1.0 - 2.0 * 0.7 / 40.0)
        assert all(0.0 < lam < 1.0 for lam in ladder.lam[:18])
        assert math.exp(ladder.log_nu(1)) == pytest.approx(ladder.nu[0])

    def test_exp_hitting_time_matches_ladder(self, mid_impact_system):
        schedule = build_bound_schedule(mid_impact_system)
        ladder = schedule.ladders[0]
        for rank in (1, 2, 5, 18, 19):
            assert exp_hitting_time(schedule, rank) == pytest.approx(ladder.tau[rank - 1], abs=1e-12)

    def test_liquidations_start_at_zero(self, mid_impact_system):
        gamma, pi = bounded_liquidations(build_bound_schedule(mid_impact_system), 0.0)
        assert np.all(gamma == 0.0)
        assert np.all(pi == 0.0)

    def test_liquidations_never_exhaust_holdings(self, high_impact_system):
        schedule = build_bound_schedule(high_impact_system)
        gamma, pi = bounded_liquidations(schedule, 1.0)
        assert np.all(pi < 1.0)
        assert np.all(gamma <= high_impact_system.holdings)


class TestMethods:
    """Test method selection and agreement"""

    def test_closed_and_generic_agree(self, mid_impact_system):
        closed = build_bound_schedule(mid_impact_system, method="closed").hitting_times()
        generic = build_bound_schedule(mid_impact_system, method="generic").hitting_times()
        np.testing.assert_allclose(generic, closed, atol=1e-9)

    def test_auto_falls_back_to_root_finding(self):
        schedule = build_bound_schedule(_linear_scenario())
        assert not schedule.ladders[0].closed_form
        assert 0.0 < schedule.hitting_times()[0] < 1.0

    def test_closed_requires_exponential_impact(self):
        with pytest.raises(NotExponentialImpact):
            build_bound_schedule(_linear_scenario(), method="closed")

    def test_unknown_method(self, mid_impact_system):
        with pytest.raises(ValueError):
            build_bound_schedule(mid_impact_system, method="newton")


class TestMultiAsset:
    """Test the per-asset decomposition"""

    def test_decomposition_weights(self):
        scenario = two_asset_scenario(0.3)
        weights = decomposition_weights(scenario.banks[0], scenario.assets, scenario.regulation)
        np.testing.assert_allclose(weights, [0.85, 0.15])

    def test_bank_without_shortfall(self):
        book = BankBook(x=2.0, s=(1.0,), p_bar=1.0)
        curve = DemandCurve(ExponentialDecay(rate=0.1), LinearImpact(0.01))
        with pytest.raises(NeverActivates):
            decomposition_weights(book, [AssetSpec(alpha=5.0, market_cap=10.0, demand=curve)], Regulation(0.1))

    def test_solvent_banks_leave_the_ladder(self):
        curve = DemandCurve(ExponentialDecay(rate=0.1, freeze_at=1.0), LinearImpact(0.01))
        banks = (BankBook(x=0.0, s=(2.0,), p_bar=0.95), BankBook(x=5.0, s=(2.0,), p_bar=1.0))
        scenario = Scenario(Regulation(0.1), banks, (AssetSpec(alpha=5.0, market_cap=40.0, demand=curve),), 1.0)
        schedule = build_bound_schedule(scenario)
        assert schedule.ladders[0].banks == (0,)
        assert schedule.hitting_time(1) == math.inf
        assert schedule.rank_of(1) is None

    def test_two_asset_ladders(self):
        scenario = two_asset_scenario(0.5)
        schedule = build_bound_schedule(scenario)
        assert schedule.multi_asset
        assert len(schedule.ladders) == 2
        # the unstressed asset never falls on its own
        assert all(math.isinf(t) for t in schedule.ladders[1].tau)


@pytest.mark.slow
class TestRandomizedDominance:
    """Dominance and closed-form agreement on random admissible scenarios"""

    def test_dominance(self, random_scenario):
        rng = np.random.default_rng(20240101)
        times = np.linspace(0.0, 1.0, 50)
        for _ in range(100):
            scenario = random_scenario(rng, int(rng.integers(1, 11)))
            schedule = build_bound_schedule(scenario)
            traj = simulate(scenario, sample_times=times)
            for t in times:
                state = traj.state_at(float(t))
                _, bound_pi = bounded_liquidations(schedule, float(t))
                assert np.all(bound_pi >= state.pi - 1e-9)
                assert bounded_price(schedule, float(t)) <= state.q[0] + 1e-9

    def test_multi_asset_dominance(self, random_multi_asset_scenario):
        rng = np.random.default_rng(20240102)
        times = np.linspace(0.0, 1.0, 50)
        for _ in range(60):
            n_assets = int(rng.integers(2, 4))
            scenario = random_multi_asset_scenario(rng, int(rng.integers(1, 8)), n_assets)
            schedule = build_bound_schedule(scenario)
            traj = simulate(scenario, sample_times=times)
            for t in times:
                state = traj.state_at(float(t))
                _, bound_pi = bounded_liquidations(schedule, float(t))
                assert np.all(bound_pi >= state.pi - MULTI_ASSET_FRACTION_TOL)
                for k in range(n_assets):
                    assert bounded_price(schedule, float(t), k) <= state.q[k] + 1e-9

    def test_closed_form_agreement(self, random_scenario):
        rng = np.random.default_rng(7)
        for _ in range(100):
            scenario = random_scenario(rng, int(rng.integers(1, 11)))
            closed = build_bound_schedule(scenario, method="closed").hitting_times()
            generic = build_bound_schedule(scenario, method="generic").hitting_times()
            np.testing.assert_allclose(generic, closed, atol=1e-9)

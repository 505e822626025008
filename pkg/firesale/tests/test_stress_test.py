"""
Tests for probabilistic stress tests
Stress laws, analytic price-distribution bounds and the Monte Carlo harness
"""

import math

import numpy as np
import pytest

from firesale.src.bounds.schedule import bounded_price, build_bound_schedule
from firesale.src.core.exceptions import NotExponentialImpact, ParseError, UnsupportedJoint
from firesale.src.demand.curves import ExponentialDecay
from firesale.src.scenarios.case_studies import (
    EXP_STRESS_MU,
    TWENTY_BANK_CAP,
    two_asset_scenario,
    twenty_bank_scenario,
)
from firesale.src.simulator.integrator import simulate
from firesale.src.stochastic.distributions import JointStress, StressDistribution, StressKind, StressTarget
from firesale.src.stochastic.stress_test import (
    MonteCarloResult,
    cdf_table,
    dkw_radius,
    draw_generator,
    monte_carlo,
    phi_inverse,
    price_cdf_lower_bound,
    price_response,
    random_ft_bound,
    stress_threshold,
)


class TestStressDistribution:
    """Test one-dimensional stress laws"""

    def test_exponential_rate(self):
        law = StressDistribution.exponential_rate(2.0)
        assert law.cdf(0.5) == pytest.approx(1.0 - math.exp(-1.0))
        assert law.prob_at_least(0.5) == pytest.approx(math.exp(-1.0))
        assert law.quantile(np.array([0.5]))[0] == pytest.approx(math.log(2.0) / 2.0)

    def test_calibration_of_the_stress_rate(self):
        """P(a >= -log 0.95) = 1/20"""
        law = StressDistribution.exponential_rate(EXP_STRESS_MU)
        assert law.prob_at_least(-math.log(0.95)) == pytest.approx(
            math.exp(-EXP_STRESS_MU * -math.log(0.95)))
        assert EXP_STRESS_MU == pytest.approx(math.log(20.0) / (math.log(20.0) - math.log(19.0)))

    def test_uniform_on_ft(self):
        law = StressDistribution.uniform(0.8, 1.0, applies_to=StressTarget.FT_VALUE)
        assert law.prob_at_least(0.9) == pytest.approx(0.5)
        assert law.stress_level(0.85, t=1.0, horizon=1.0) == 0.85

    def test_point_law(self):
        law = StressDistribution.point(0.3)
        assert law.cdf(0.3) == 1.0
        assert law.prob_at_least(0.31) == 0.0
        assert law.sample(draw_generator(1, 0)) == 0.3

    def test_tabulated_quantile(self):
        law = StressDistribution.tabulated_quantile([0.0, 0.5, 1.0], [0.0, 0.1, 0.5])
        assert law.cdf(0.1) == pytest.approx(0.5)
        assert law.cdf(0.3) == pytest.approx(0.75)
        assert law.quantile(np.array([0.25]))[0] == pytest.approx(0.05)

    def test_tabulated_atom(self):
        law = StressDistribution.tabulated_quantile([0.0, 0.5, 1.0], [0.2, 0.2, 0.4])
        assert law.prob_at_least(0.2) == pytest.approx(1.0)

    @pytest.mark.parametrize("factory", [
        lambda: StressDistribution.exponential_rate(0.0),
        lambda: StressDistribution.uniform(1.0, 0.5),
        lambda: StressDistribution.uniform(0.5, 1.5, applies_to=StressTarget.FT_VALUE),
        lambda: StressDistribution(StressKind.EXPONENTIAL_RATE, StressTarget.FT_VALUE, (1.0,)),
    ])
    def test_invalid_laws(self, factory):
        with pytest.raises(ParseError):
            factory()

    def test_dict_round_trip(self):
        law = StressDistribution.tabulated_quantile([0.0, 1.0], [0.1, 0.2])
        assert StressDistribution.from_dict(law.to_dict()) == law
        assert StressDistribution.from_dict({"kind": "exponential-rate", "mu": 3.0}) == \
            StressDistribution.exponential_rate(3.0)

    def test_unknown_kind(self):
        with pytest.raises(ParseError):
            StressDistribution.from_dict({"kind": "gamma"})


class TestJointStress:
    """Test joint laws across assets"""

    def test_independent_product(self):
        joint = JointStress.independent(StressDistribution.exponential_rate(1.0),
                                        StressDistribution.exponential_rate(2.0))
        assert joint.is_independent
        assert joint.joint_probability([lambda v: True] * 2, [0.5, 0.4]) == pytest.approx(0.2)

    def test_mixed_targets_rejected(self):
        with pytest.raises(ParseError):
            JointStress.independent(StressDistribution.exponential_rate(1.0),
                                    StressDistribution.uniform(0.5, 1.0, applies_to=StressTarget.FT_VALUE))

    def test_sampler_fraction(self):
        joint = JointStress.from_sampler(lambda rng: np.repeat(rng.random(), 2), n_assets=2)
        p = joint.joint_probability([lambda v: v <= 0.5, lambda v: v <= 0.5], [None, None],
                                    n_samples=20_000, seed=3)
        assert p == pytest.approx(0.5, abs=0.02)

    def test_sampler_trapezoid_over_sorted_draws(self):
        values = iter([3.0, 0.0, 4.0, 1.0, 2.0])
        joint = JointStress.from_sampler(lambda rng: next(values), n_assets=1)
        # sorted indicator 1, 1, 1, 0, 0 on a grid of step 1/4
        assert joint.joint_probability([lambda v: v <= 2.0], [None], n_samples=5) == pytest.approx(0.625)

    def test_single_draw_returns_indicator(self):
        joint = JointStress.from_sampler(lambda rng: np.array([0.2, 0.9]), n_assets=2)
        events = [lambda v: v <= 0.5, lambda v: v <= 0.5]
        assert joint.joint_probability(events, [None, None], n_samples=1) == 0.0
        assert joint.joint_probability(events[:1], [None, None], n_samples=1) == 1.0

    def test_sampler_needs_draws(self):
        joint = JointStress.from_sampler(lambda rng: np.array([0.2]), n_assets=1)
        with pytest.raises(ParseError):
            joint.joint_probability([lambda v: True], [None], n_samples=0)

    def test_dependent_without_sampler(self):
        joint = JointStress(marginals=(None, None), dependent=True)
        with pytest.raises(UnsupportedJoint):
            joint.joint_probability([lambda v: True] * 2, [None, None])


class TestAnalyticBounds:
    """Test the Lambert W price-distribution bound"""

    def test_first_segment_is_linear(self, mid_impact_system):
        schedule = build_bound_schedule(mid_impact_system)
        assert phi_inverse(schedule, 0, 0, -0.2) == pytest.approx(0.2)

    def test_no_impact_threshold_is_the_level(self, no_impact_system):
        schedule = build_bound_schedule(no_impact_system)
        phi, level = stress_threshold(schedule, 0, 0.9)
        assert phi == pytest.approx(-math.log(0.9))
        assert level == pytest.approx(0.9)

    def test_no_impact_bound_is_exact(self, no_impact_system):
        schedule = build_bound_schedule(no_impact_system)
        stress = StressDistribution.exponential_rate(EXP_STRESS_MU)
        for q_star in (0.8, 0.9, 0.95):
            p = price_cdf_lower_bound(no_impact_system, schedule, 1.0, q_star, stress)
            assert p == pytest.approx(1.0 - q_star ** EXP_STRESS_MU, abs=1e-12)

    def test_impact_lowers_the_bound(self, no_impact_system):
        stress = StressDistribution.exponential_rate(EXP_STRESS_MU)
        stressed = twenty_bank_scenario(0.9 / TWENTY_BANK_CAP)
        calm = price_cdf_lower_bound(no_impact_system, build_bound_schedule(no_impact_system), 1.0, 0.9, stress)
        hit = price_cdf_lower_bound(stressed, build_bound_schedule(stressed), 1.0, 0.9, stress)
        assert hit < calm

    def test_bound_is_monotone_in_level(self, mid_impact_system):
        schedule = build_bound_schedule(mid_impact_system)
        stress = StressDistribution.exponential_rate(EXP_STRESS_MU)
        probs = [price_cdf_lower_bound(mid_impact_system, schedule, 1.0, q, stress)
                 for q in np.linspace(0.7, 1.0, 31)]
        assert np.all(np.diff(probs) <= 1e-12)

    def test_threshold_matches_bound_price(self, mid_impact_system):
        """At the threshold level the bound price equals q*"""
        schedule = build_bound_schedule(mid_impact_system)
        phi, _ = stress_threshold(schedule, 0, 0.85)
        stressed = mid_impact_system.with_time_decays([ExponentialDecay(rate=phi, freeze_at=1.0)])
        assert bounded_price(build_bound_schedule(stressed), 1.0) == pytest.approx(0.85, abs=1e-8)

    def test_random_ft_bound(self, no_impact_system):
        schedule = build_bound_schedule(no_impact_system)
        law = StressDistribution.uniform(0.8, 1.0, applies_to=StressTarget.FT_VALUE)
        assert random_ft_bound(no_impact_system, schedule, 1.0, 0.9, law) == pytest.approx(0.5)

    def test_random_ft_bound_accepts_rate_laws(self, mid_impact_system):
        schedule = build_bound_schedule(mid_impact_system)
        stress = StressDistribution.exponential_rate(EXP_STRESS_MU)
        assert random_ft_bound(mid_impact_system, schedule, 1.0, 0.9, stress) == pytest.approx(
            price_cdf_lower_bound(mid_impact_system, schedule, 1.0, 0.9, stress), abs=1e-12)

    def test_q_star_range(self, mid_impact_system):
        with pytest.raises(ValueError):
            stress_threshold(build_bound_schedule(mid_impact_system), 0, 1.2)

    def test_needs_closed_form(self, mid_impact_system):
        schedule = build_bound_schedule(mid_impact_system, method="generic")
        with pytest.raises(NotExponentialImpact):
            stress_threshold(schedule, 0, 0.9)

    def test_two_assets_multiply_marginals(self):
        scenario = two_asset_scenario(0.0)
        schedule = build_bound_schedule(scenario)
        law = StressDistribution.exponential_rate(EXP_STRESS_MU)
        single = price_cdf_lower_bound(scenario, schedule, 1.0, [0.9, 0.5], JointStress.independent(law, None))
        both = price_cdf_lower_bound(scenario, schedule, 1.0, [0.9, 0.9], JointStress.independent(law, law))
        assert 0.0 <= both <= single <= 1.0


class TestMonteCarlo:
    """Test the seeded Monte Carlo harness"""

    def test_generator_is_keyed_by_seed_and_index(self):
        a = draw_generator(42, 3).random(4)
        np.testing.assert_array_equal(a, draw_generator(42, 3).random(4))
        assert not np.array_equal(a, draw_generator(42, 4).random(4))
        assert not np.array_equal(a, draw_generator(43, 3).random(4))

    def test_dkw_radius(self):
        assert dkw_radius(10_000, 0.99) == pytest.approx(math.sqrt(math.log(200.0) / 20_000.0))
        assert dkw_radius(10_000, 0.99) == pytest.approx(0.016276, abs=1e-6)

    def test_result_statistics(self):
        prices = np.array([[0.7], [0.8], [0.9], [1.0]])
        result = MonteCarloResult(t=1.0, seed=0, parameters=np.zeros((4, 1)), stress_levels=prices,
                                  prices=prices)
        assert result.n_samples == 4
        assert result.cdf(0.8) == 0.5
        assert result.prob_at_least(0.8) == 0.75
        assert result.stress_cdf(0.95) == 0.75
        lo, hi = result.band(0.5)
        assert lo == max(0.0, 0.5 - result.radius)
        assert hi == min(1.0, 0.5 + result.radius)

    def test_no_impact_prices_equal_stress(self, no_impact_system):
        stress = StressDistribution.exponential_rate(EXP_STRESS_MU)
        result = monte_carlo(no_impact_system, stress, 1.0, 200, seed=11)
        np.testing.assert_allclose(result.prices[:, 0], np.exp(-result.parameters[:, 0]), atol=1e-9)
        assert result.metadata["path"] == "single-asset stress-level"

    def test_reproducible(self, mid_impact_system):
        stress = StressDistribution.exponential_rate(EXP_STRESS_MU)
        first = monte_carlo(mid_impact_system, stress, 1.0, 50, seed=5)
        second = monte_carlo(mid_impact_system, stress, 1.0, 50, seed=5)
        np.testing.assert_array_equal(first.prices, second.prices)
        np.testing.assert_array_equal(first.parameters, second.parameters)

    def test_draws_are_prefix_stable(self, mid_impact_system):
        stress = StressDistribution.exponential_rate(EXP_STRESS_MU)
        small = monte_carlo(mid_impact_system, stress, 1.0, 20, seed=5)
        large = monte_carlo(mid_impact_system, stress, 1.0, 40, seed=5)
        np.testing.assert_array_equal(small.parameters, large.parameters[:20])

    def test_price_response_matches_direct_simulation(self, mid_impact_system):
        levels = np.array([0.85, 0.95])
        shared = price_response(mid_impact_system, levels)[:, 0]
        for v, q in zip(levels, shared):
            direct = simulate(mid_impact_system.with_time_decays([ExponentialDecay(rate=-math.log(v), freeze_at=1.0)]))
            assert q == pytest.approx(direct.terminal.q[0], abs=1e-6)

    def test_per_draw_path(self):
        scenario = two_asset_scenario(0.5)
        stress = JointStress.independent(StressDistribution.uniform(0.02, 0.08), None)
        result = monte_carlo(scenario, stress, 1.0, 3, seed=1,
                             engine_config={"integrator": {"output_grid": 11}})
        assert result.metadata["path"] == "per-draw"
        assert result.prices.shape == (3, 2)
        assert np.all(result.prices[:, 0] <= result.stress_levels[:, 0] + 1e-12)

    def test_invalid_sample_count(self, mid_impact_system):
        with pytest.raises(ValueError):
            monte_carlo(mid_impact_system, StressDistribution.exponential_rate(1.0), 1.0, 0, seed=1)

    def test_dependent_law_needs_sampler(self, mid_impact_system):
        joint = JointStress(marginals=(None,), dependent=True)
        with pytest.raises(UnsupportedJoint):
            monte_carlo(mid_impact_system, joint, 1.0, 10, seed=1)

    def test_cdf_table(self, mid_impact_system):
        stress = StressDistribution.exponential_rate(EXP_STRESS_MU)
        schedule = build_bound_schedule(mid_impact_system)
        result = monte_carlo(mid_impact_system, stress, 1.0, 100, seed=2)
        rows = cdf_table(result, [0.95, 0.8, 0.9], mid_impact_system, schedule, stress)
        assert [r["q_star"] for r in rows] == [0.8, 0.9, 0.95]
        for row in rows:
            assert row["dkw_lo"] <= row["empirical_p"] <= row["dkw_hi"]
            assert row["analytic_bound_p"] == pytest.approx(1.0 - row["analytic_bound_p_ge"])

    def test_cdf_table_without_bounds(self, mid_impact_system):
        result = monte_carlo(mid_impact_system, StressDistribution.exponential_rate(EXP_STRESS_MU), 1.0, 10, seed=2)
        rows = cdf_table(result, [0.9])
        assert math.isnan(rows[0]["analytic_bound_p"])


@pytest.mark.slow
class TestProbabilityAcceptance:
    """Random exponential stress on the twenty-bank system with b = 0.9/M"""

    @pytest.fixture(scope="class")
    def outcome(self):
        scenario = twenty_bank_scenario(0.9 / TWENTY_BANK_CAP)
        stress = StressDistribution.exponential_rate(EXP_STRESS_MU)
        schedule = build_bound_schedule(scenario)
        result = monte_carlo(scenario, stress, 1.0, 10_000, seed=20240101)
        return scenario, schedule, stress, result

    def test_empirical_tail(self, outcome):
        _, _, _, result = outcome
        assert result.cdf(0.9) == pytest.approx(0.055, abs=0.01)
        assert result.cdf(0.8) == pytest.approx(0.014, abs=0.007)

    def test_analytic_tail(self, outcome):
        scenario, schedule, stress, _ = outcome
        assert 1.0 - price_cdf_lower_bound(scenario, schedule, 1.0, 0.8, stress) == pytest.approx(0.02, abs=0.005)

    def test_no_impact_control(self, outcome):
        _, _, _, result = outcome
        assert result.stress_cdf(0.9) == pytest.approx(0.002, abs=0.002)

    def test_bound_dominates_within_band(self, outcome):
        scenario, schedule, stress, result = outcome
        rows = cdf_table(result, np.linspace(0.7, 1.0, 61), scenario, schedule, stress)
        for row in rows:
            assert row["analytic_bound_p_ge"] <= row["empirical_p_ge"] + result.radius

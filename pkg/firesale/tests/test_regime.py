"""
Tests for the regime right-hand side
"""

import numpy as np
import pytest

from firesale.src.core.exceptions import NearSingularRegime, SingularUpdate
from firesale.src.core.model import SystemState
from firesale.src.dynamics.regime import (
    compute_lambda,
    compute_Z,
    regime_determinants,
    rhs,
    sherman_morrison_solve,
    state_derivative,
)
from firesale.src.scenarios.case_studies import two_asset_scenario, twenty_bank_scenario


def _state(scenario, active, t=0.0, pi=None):
    n = scenario.n_banks
    pi = np.zeros(n) if pi is None else np.asarray(pi, dtype=float)
    return SystemState.build(t, pi, scenario.prices(t, pi), np.zeros(n), scenario.holdings, active)


class TestShermanMorrison:
    """Test the rank-one solver"""

    def test_matches_dense_solve(self):
        rng = np.random.default_rng(7)
        z = rng.uniform(0.0, 1.0, size=6)
        rhs_vec = rng.normal(size=6)
        scale = -0.05
        dense = np.eye(6) + scale * np.outer(z, np.ones(6))
        np.testing.assert_allclose(sherman_morrison_solve(z, scale, rhs_vec),
                                   np.linalg.solve(dense, rhs_vec), rtol=1e-12)

    def test_vanishing_denominator(self):
        with pytest.raises(SingularUpdate):
            sherman_morrison_solve(np.array([0.5, 0.5]), -1.0, np.ones(2))


class TestRegimeQuantities:
    """Test Z, Lambda and Sylvester's identity"""

    def test_lambda_with_first_firm_active(self):
        scenario = twenty_bank_scenario(0.0175)
        lam = compute_lambda(0.0, _state(scenario, {0}), scenario)
        assert lam[0] == pytest.approx(0.965)

    def test_lambda_is_one_without_impact(self, no_impact_system):
        lam = compute_lambda(0.0, _state(no_impact_system, range(5)), no_impact_system)
        assert lam[0] == pytest.approx(1.0)

    def test_lambda_floor(self):
        scenario = twenty_bank_scenario(1.0)
        with pytest.raises(NearSingularRegime):
            compute_lambda(0.0, _state(scenario, {0}), scenario)

    def test_z_rows_vanish_for_inactive_banks(self, mid_impact_system):
        z = compute_Z(0.0, _state(mid_impact_system, {0, 2}), mid_impact_system)
        assert np.all(z >= 0.0)
        assert z[0, 0] > 0.0 and z[2, 0] > 0.0
        assert z[1, 0] == 0.0 and np.all(z[3:] == 0.0)

    def test_z_units_scales_by_holdings(self, mid_impact_system):
        state = _state(mid_impact_system, {0, 1})
        frac = compute_Z(0.0, state, mid_impact_system)
        units = compute_Z(0.0, state, mid_impact_system, units=True)
        np.testing.assert_allclose(units, frac * mid_impact_system.holdings)

    def test_sylvester_identity(self):
        scenario = two_asset_scenario(0.3)
        state = _state(scenario, {0, 1}, t=0.2, pi=[0.05, 0.02])
        left, right = regime_determinants(0.2, state, scenario)
        assert left == pytest.approx(right, rel=1e-12)
        assert left > 0.0


class TestStateDerivative:
    """Test liquidation speeds and price drifts"""

    def test_rank_one_path_matches_general_solve(self, mid_impact_system):
        mask = np.zeros(20, dtype=bool)
        mask[:4] = True
        pi = np.array([0.03, 0.01, 0.005, 0.0] + [0.0] * 16)
        fast = state_derivative(0.3, pi, mid_impact_system, mask, rank_one=True)
        general = state_derivative(0.3, pi, mid_impact_system, mask, rank_one=False)
        for a, b in zip(fast, general):
            np.testing.assert_allclose(a, b, rtol=1e-10, atol=1e-14)

    def test_signs(self, mid_impact_system):
        result = rhs(0.1, _state(mid_impact_system, {0, 1, 2}, t=0.1), mid_impact_system)
        assert np.all(result.pi_dot[:3] > 0.0)
        assert np.all(result.pi_dot[3:] == 0.0)
        assert result.q_dot[0] < 0.0
        assert np.all(result.psi_dot >= 0.0)

    def test_price_drift_divided_by_lambda(self, mid_impact_system):
        state = _state(mid_impact_system, {0}, t=0.1)
        result = rhs(0.1, state, mid_impact_system)
        decay = mid_impact_system.assets[0].demand.time_part
        assert result.q_dot[0] == pytest.approx(decay.derivative(0.1) / result.lam[0])

    def test_no_active_banks_follow_exogenous_drift(self, mid_impact_system):
        mask = np.zeros(20, dtype=bool)
        pi_dot, q_dot, psi_dot = state_derivative(0.1, np.zeros(20), mid_impact_system, mask)
        assert np.all(pi_dot == 0.0) and np.all(psi_dot == 0.0)
        assert q_dot[0] == pytest.approx(mid_impact_system.assets[0].demand.time_part.derivative(0.1))

    def test_two_asset_general_path(self):
        scenario = two_asset_scenario(0.5)
        result = rhs(0.2, _state(scenario, {0, 1}, t=0.2), scenario)
        assert np.all(result.pi_dot >= 0.0)
        assert np.all(result.q_dot <= 0.0)

"""
Regime Dynamics
Right-hand side of the liquidation ODE for a fixed set of active banks
"""

import logging
from dataclasses import dataclass
from typing import FrozenSet, Iterable, Optional, Tuple

import numpy as np

from ..core.exceptions import LinearSolveFailure, NearSingularRegime, SingularUpdate
from ..core.model import SystemState
from ..core.scenario import Scenario

logger = logging.getLogger(__name__)

DEFAULT_LAMBDA_FLOOR = 1e-12
SINGULAR_DENOMINATOR = 1e-14


def sherman_morrison_solve(z: np.ndarray, scale: float, rhs_vec: np.ndarray) -> np.ndarray:
    """
    Solve (I + scale * z 1^T) y = rhs_vec in O(n)

    Args:
        z: Column of the rank-one update
        scale: Scalar multiplying the update
        rhs_vec: Right-hand side

    Returns:
        y = rhs - scale * z (1^T rhs) / (1 + scale * sum(z))

    Raises:
        SingularUpdate: If the denominator vanishes
    """
    z = np.asarray(z, dtype=float)
    rhs_vec = np.asarray(rhs_vec, dtype=float)
    denom = 1.0 + scale * z.sum()
    if abs(denom) < SINGULAR_DENOMINATOR:
        raise SingularUpdate(f"Rank-one update denominator {denom:.3e} is numerically zero")
    return rhs_vec - scale * z * (rhs_vec.sum() / denom)


def _active_mask(n: int, active: Iterable[int]) -> np.ndarray:
    mask = np.zeros(n, dtype=bool)
    mask[list(active)] = True
    return mask


def compute_Z(t: float, state: SystemState, scenario: Scenario, units: bool = False) -> np.ndarray:
    """
    Sensitivity of liquidations to prices for the active banks

    Row i is zero unless bank i is active. The default (fractional) form
    satisfies pi_dot = -Z q_dot; with units=True each entry is scaled by
    s_ik, which for one asset is Gamma_dot = -Z q_dot.

    Args:
        t: Time
        state: Current state (prices must match the demand curves)
        scenario: Scenario
        units: Return the liquidated-units form

    Returns:
        (n, m) nonnegative matrix
    """
    mask = _active_mask(scenario.n_banks, state.active)
    z = _z_matrix(scenario, state.pi, state.q, mask)
    return z * scenario.holdings if units else z


def _z_matrix(scenario: Scenario, pi: np.ndarray, q: np.ndarray, mask: np.ndarray) -> np.ndarray:
    s = scenario.holdings
    z = np.zeros_like(s)
    if not mask.any():
        return z
    sa = s[mask]
    rwa = sa @ (scenario.weighted_alpha * q)
    remaining = sa * (1.0 - pi[mask])[:, None]
    z[mask] = remaining * scenario.sale_weight[None, :] / rwa[:, None]
    return z


def compute_lambda(t: float, state: SystemState, scenario: Scenario,
                   lambda_floor: float = DEFAULT_LAMBDA_FLOOR) -> np.ndarray:
    """
    Regime multipliers Lambda_k = 1 + kappa_k [sum_active (s - Gamma)] f_Gamma'/f_Gamma

    Raises:
        NearSingularRegime: If any Lambda_k falls below lambda_floor
    """
    mask = _active_mask(scenario.n_banks, state.active)
    return _lambda(scenario, state.pi, mask, lambda_floor, t)


def _lambda(scenario: Scenario, pi: np.ndarray, mask: np.ndarray, lambda_floor: float,
            t: float) -> np.ndarray:
    s = scenario.holdings
    units = scenario.liquidated_units(pi)
    remaining = (s[mask] * (1.0 - pi[mask])[:, None]).sum(axis=0)
    log_slope = np.array([a.demand.impact_part.log_derivative(g) for a, g in zip(scenario.assets, units)])
    lam = 1.0 + scenario.kappa * remaining * log_slope
    if np.any(lam < lambda_floor):
        k = int(np.argmin(lam))
        raise NearSingularRegime(
            f"Lambda for asset {k} is {lam[k]:.3e}, below the floor {lambda_floor:.1e}; "
            "risk-weights are not admissible for this price impact", t=t)
    return lam


@dataclass(frozen=True)
class RegimeRHS:
    """
    Linearized liquidation system of one regime at one state

    Attributes:
        active: Active banks
        lam: Per-asset Lambda_k
        z: Fractional Z matrix (n, m)
        determinant: det(I + Z D s^T) of the regime system
        pi_dot: Liquidation speeds (zero for inactive banks)
        q_dot: Price drifts
        psi_dot: Proceeds rates
    """

    active: FrozenSet[int]
    lam: np.ndarray
    z: np.ndarray
    determinant: float
    pi_dot: np.ndarray
    q_dot: np.ndarray
    psi_dot: np.ndarray


def state_derivative(t: float, pi: np.ndarray, scenario: Scenario, mask: np.ndarray,
                     lambda_floor: float = DEFAULT_LAMBDA_FLOOR,
                     rank_one: Optional[bool] = None) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Array-level right-hand side used by the integrator

    Args:
        t: Time
        pi: Liquidated fractions
        scenario: Scenario
        mask: Boolean mask of active banks
        lambda_floor: Minimal admissible Lambda
        rank_one: Force (True) or forbid (False) the single-asset rank-one path;
            None picks it whenever there is one asset

    Returns:
        (pi_dot, q_dot, psi_dot)
    """
    n, m = scenario.n_banks, scenario.n_assets
    s = scenario.holdings
    units = scenario.liquidated_units(pi)
    ft = np.array([a.demand.time_part.value(t) for a in scenario.assets])
    ft_prime = np.array([a.demand.time_part.derivative(t) for a in scenario.assets])
    fg = np.array([a.demand.impact_part.value(g) for a, g in zip(scenario.assets, units)])
    fg_prime = np.array([a.demand.impact_part.derivative(g) for a, g in zip(scenario.assets, units)])
    q = ft * fg
    drift = ft_prime * fg
    pi_dot = np.zeros(n)

    if not mask.any():
        return pi_dot, drift, pi_dot.copy()

    lam = _lambda(scenario, pi, mask, lambda_floor, t)
    slope = ft * fg_prime
    z = _z_matrix(scenario, pi, q, mask)

    if rank_one is None:
        rank_one = m == 1
    if rank_one:
        z_units = z[mask, 0] * s[mask, 0]
        gamma_dot = sherman_morrison_solve(z_units, slope[0], -z_units * drift[0])
        pi_dot[mask] = gamma_dot / s[mask, 0]
        q_dot = drift / lam
    else:
        za = z[mask]
        sa = s[mask]
        system = np.eye(za.shape[0]) + za @ (slope[:, None] * sa.T)
        try:
            pi_dot[mask] = np.linalg.solve(system, -za @ drift)
        except np.linalg.LinAlgError as e:
            raise LinearSolveFailure(f"Regime system with {za.shape[0]} active banks is singular: {e}", t=t)
        q_dot = drift + slope * (sa.T @ pi_dot[mask])

    psi_dot = pi_dot * (s @ q)
    return pi_dot, q_dot, psi_dot


def regime_determinants(t: float, state: SystemState, scenario: Scenario) -> Tuple[float, float]:
    """
    Both sides of Sylvester's identity for the regime system

    Returns:
        (det(I_n + Z D s^T), det(I_m + D s^T Z)) with D = diag(f_t f_Gamma')
    """
    z = compute_Z(t, state, scenario)
    units = scenario.liquidated_units(state.pi)
    slope = np.array([a.demand.time_part.value(t) * a.demand.impact_part.derivative(g)
                      for a, g in zip(scenario.assets, units)])
    d_st = slope[:, None] * scenario.holdings.T
    left = np.linalg.det(np.eye(scenario.n_banks) + z @ d_st)
    right = np.linalg.det(np.eye(scenario.n_assets) + d_st @ z)
    return float(left), float(right)


def rhs(t: float, state: SystemState, scenario: Scenario,
        lambda_floor: float = DEFAULT_LAMBDA_FLOOR, rank_one: Optional[bool] = None) -> RegimeRHS:
    """
    Evaluate the regime right-hand side at a state

    Inactive banks have pi_dot = 0; for admissible regimes pi_dot >= 0 and q_dot <= 0.

    Raises:
        NearSingularRegime: If a Lambda_k is below the floor
        LinearSolveFailure: If the regime system is singular
    """
    mask = _active_mask(scenario.n_banks, state.active)
    pi_dot, q_dot, psi_dot = state_derivative(t, state.pi, scenario, mask, lambda_floor, rank_one)
    lam = _lambda(scenario, state.pi, mask, lambda_floor, t) if mask.any() else np.ones(scenario.n_assets)
    left, _ = regime_determinants(t, state, scenario)
    return RegimeRHS(active=frozenset(state.active), lam=lam, z=compute_Z(t, state, scenario),
                     determinant=left, pi_dot=pi_dot, q_dot=q_dot, psi_dot=psi_dot)

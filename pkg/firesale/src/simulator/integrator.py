"""
Event-Driven Integrator
Fixed-step RK4 between activations, bisection on activation margins at events
"""

import logging
import math
from dataclasses import dataclass, replace
from typing import Any, Dict, Iterable, Optional, Sequence, Set, Tuple

import numpy as np

from ..core.exceptions import ConstraintDrift, LinearSolveFailure, MonotonicityViolation
from ..core.model import SystemState, Trajectory
from ..core.scenario import Scenario
from ..dynamics.regime import DEFAULT_LAMBDA_FLOOR, _lambda, state_derivative

logger = logging.getLogger(__name__)

MONOTONICITY_TOL = 1e-12


@dataclass(frozen=True)
class IntegratorConfig:
    """Numerical knobs of one simulation"""

    base_step: float
    event_tol: float = 1e-10
    constraint_tol: float = 1e-8
    output_grid: int = 501
    lambda_floor: float = DEFAULT_LAMBDA_FLOOR
    max_step_halvings: int = 6

    def __post_init__(self):
        for attr in ("base_step", "event_tol", "constraint_tol", "lambda_floor"):
            if getattr(self, attr) <= 0:
                raise ValueError(f"{attr} must be positive, got {getattr(self, attr)}")
        if self.output_grid < 2:
            raise ValueError(f"output_grid needs at least 2 points, got {self.output_grid}")
        if self.event_tol >= self.base_step:
            raise ValueError(f"event_tol ({self.event_tol}) must be below base_step ({self.base_step})")
        if self.max_step_halvings < 0:
            raise ValueError("max_step_halvings must be nonnegative")

    @classmethod
    def for_horizon(cls, horizon: float, **overrides) -> "IntegratorConfig":
        """Defaults scaled to a horizon (base step T/2000)"""
        settings: Dict[str, Any] = {"base_step": (horizon if horizon > 0 else 1.0) / 2000.0}
        settings.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**settings)

    @classmethod
    def from_engine_config(cls, config: Dict[str, Any], horizon: float, **overrides) -> "IntegratorConfig":
        """
        Build from the 'integrator' section of an engine configuration

        Args:
            config: Full engine configuration dictionary
            horizon: Scenario horizon T
            **overrides: Explicit values (CLI flags); None entries are ignored
        """
        section = config.get("integrator", {})
        scale = horizon if horizon > 0 else 1.0
        settings: Dict[str, Any] = {
            "base_step": section.get("base_step_fraction", 1.0 / 2000.0) * scale,
            "event_tol": section.get("event_tol", 1e-10),
            "constraint_tol": section.get("constraint_tol", 1e-8),
            "output_grid": section.get("output_grid", 501),
            "lambda_floor": section.get("lambda_floor", DEFAULT_LAMBDA_FLOOR),
            "max_step_halvings": section.get("max_step_halvings", 6),
        }
        settings.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**settings)

    def halved(self) -> "IntegratorConfig":
        return replace(self, base_step=self.base_step / 2.0)


# ---------------------------------------------------------------------------
# Single-regime stepping
# ---------------------------------------------------------------------------

class _Regime:
    """RK4 stepper for the state y = [pi, psi] under a fixed active set"""

    def __init__(self, scenario: Scenario, active: Iterable[int], config: IntegratorConfig):
        self.scenario = scenario
        self.n = scenario.n_banks
        self.mask = np.zeros(self.n, dtype=bool)
        self.mask[list(active)] = True
        self.config = config

    def derivative(self, t: float, y: np.ndarray) -> np.ndarray:
        pi_dot, _, psi_dot = state_derivative(t, y[:self.n], self.scenario, self.mask,
                                              self.config.lambda_floor)
        return np.concatenate([pi_dot, psi_dot])

    def step(self, t: float, y: np.ndarray, h: float) -> np.ndarray:
        k1 = self.derivative(t, y)
        k2 = self.derivative(t + h / 2, y + h * k1 / 2)
        k3 = self.derivative(t + h / 2, y + h * k2 / 2)
        k4 = self.derivative(t + h, y + h * k3)
        return y + h * (k1 + 2 * k2 + 2 * k3 + k4) / 6


def _prices(scenario: Scenario, t: float, y: np.ndarray) -> np.ndarray:
    return scenario.prices(t, y[:scenario.n_banks])


def _inactive_margins(scenario: Scenario, t: float, y: np.ndarray, inactive: Sequence[int]) -> np.ndarray:
    return scenario.margins(_prices(scenario, t, y))[list(inactive)]


def locate_activation(t_lo: float, y_lo: np.ndarray, t_hi: float, inactive: Sequence[int],
                      scenario: Scenario, active: Iterable[int],
                      config: IntegratorConfig) -> Tuple[float, np.ndarray, Set[int]]:
    """
    Earliest activation time inside a step

    Bisects on the activation margins of the inactive banks, re-integrating
    from the step start each time; margins are nonincreasing so the bracket
    stays valid.

    Args:
        t_lo: Step start (all margins positive there)
        y_lo: State [pi, psi] at t_lo
        t_hi: Step end (some margin <= 0 there)
        inactive: Banks not yet active
        scenario: Scenario
        active: Banks active on the step
        config: Integrator settings (event_tol)

    Returns:
        (tau, state at tau, banks whose margin is <= 0 at tau)
    """
    regime = _Regime(scenario, active, config)
    lo, hi = t_lo, t_hi
    y_hi = regime.step(t_lo, y_lo, t_hi - t_lo)
    while hi - lo > config.event_tol:
        mid = 0.5 * (lo + hi)
        y_mid = regime.step(t_lo, y_lo, mid - t_lo)
        if np.min(_inactive_margins(scenario, mid, y_mid, inactive)) <= 0.0:
            hi, y_hi = mid, y_mid
        else:
            lo = mid
    margins = _inactive_margins(scenario, hi, y_hi, inactive)
    newly_active = {bank for bank, g in zip(inactive, margins) if g <= 0.0}
    return hi, y_hi, newly_active


def _constraint_residuals(scenario: Scenario, pi: np.ndarray, q: np.ndarray, psi: np.ndarray,
                          active: Sequence[int]) -> np.ndarray:
    theta = scenario.capital_ratios(pi, q, psi)
    return np.abs(theta[list(active)] - scenario.regulation.theta_min)


def renormalize_active(state: SystemState, scenario: Scenario,
                       constraint_tol: float = 1e-8) -> SystemState:
    """
    Pull active banks back onto theta = theta_min

    Residuals up to constraint_tol are accepted as is; residuals up to
    10 * constraint_tol trigger one Newton projection of the active
    fractions at fixed t and psi.

    Raises:
        ConstraintDrift: If a residual exceeds 10 * constraint_tol, or the
            projected state is still more than constraint_tol off the boundary
    """
    active = sorted(state.active)
    if not active:
        return state
    residuals = _constraint_residuals(scenario, state.pi, state.q, state.psi, active)
    worst = float(residuals.max())
    if worst <= constraint_tol:
        return state
    if worst > 10.0 * constraint_tol:
        bank = active[int(np.argmax(residuals))]
        raise ConstraintDrift(f"Bank {bank} drifted {worst:.3e} off the regulatory boundary", t=state.t)

    t = state.t
    s = scenario.holdings
    w = scenario.sale_weight
    idx = np.array(active)
    pi = state.pi.copy()
    units = scenario.liquidated_units(pi)
    ft = np.array([a.demand.time_part.value(t) for a in scenario.assets])
    fg = np.array([a.demand.impact_part.value(g) for a, g in zip(scenario.assets, units)])
    fg_prime = np.array([a.demand.impact_part.derivative(g) for a, g in zip(scenario.assets, units)])
    q = ft * fg

    sa = s[idx]
    h = (sa * (1.0 - pi[idx])[:, None]) @ (w * q) - (scenario.liability_gaps[idx] - state.psi[idx])
    jac = -np.diag(sa @ (w * q))
    jac += (sa * (1.0 - pi[idx])[:, None] * w[None, :]) @ ((ft * fg_prime)[:, None] * sa.T)
    try:
        pi[idx] -= np.linalg.solve(jac, h)
    except np.linalg.LinAlgError as e:
        raise ConstraintDrift(f"Projection onto the regulatory boundary failed: {e}", t=t)
    projected = state.with_fractions(pi, scenario.prices(t, pi), s)
    after = _constraint_residuals(scenario, projected.pi, projected.q, projected.psi, active)
    if float(after.max()) > constraint_tol:
        bank = active[int(np.argmax(after))]
        raise ConstraintDrift(f"Projection left bank {bank} {float(after.max()):.3e} off the regulatory boundary",
                              t=t)
    logger.debug(f"Projected {len(active)} active banks at t={t:.6g} (residual {worst:.3e} -> {float(after.max()):.3e})")
    return projected


# ---------------------------------------------------------------------------
# Trajectory assembly
# ---------------------------------------------------------------------------

def exponential_liquidation_cap(scenario: Scenario, state: SystemState, t_end: float,
                                lam: np.ndarray, points: int = 64) -> np.ndarray:
    """
    Lower bound on remaining units s - Gamma over [state.t, t_end] for one asset

    s - Gamma(t) >= (s - Gamma(tau)) exp(K (t - tau)) with
    K = kappa inf(f_t'/f_t) / Lambda(tau).
    """
    decay = scenario.assets[0].demand.time_part
    grid = np.linspace(state.t, t_end, points)
    rate = min(decay.derivative(u) / decay.value(u) for u in grid)
    k = scenario.kappa[0] * rate / lam[0]
    remaining = scenario.holdings[:, 0] - state.gamma[:, 0]
    return remaining * math.exp(k * (t_end - state.t))


def _stop_times(horizon: float, config: IntegratorConfig,
                sample_times: Optional[Sequence[float]]) -> np.ndarray:
    grid = np.linspace(0.0, horizon, config.output_grid)
    if sample_times is not None and len(sample_times):
        extra = np.clip(np.asarray(sample_times, dtype=float), 0.0, horizon)
        grid = np.union1d(grid, extra)
    return np.unique(grid)


def _check_step(prev: SystemState, new: SystemState, tol: float):
    if np.any(new.pi < prev.pi - tol):
        raise MonotonicityViolation("Liquidated fractions decreased", t=new.t)
    if np.any(new.q > prev.q + tol):
        raise MonotonicityViolation("Prices increased", t=new.t)
    if np.any(new.pi >= 1.0):
        raise MonotonicityViolation("A bank liquidated its whole tradable book", t=new.t)


def _integrate(scenario: Scenario, config: IntegratorConfig,
               sample_times: Optional[Sequence[float]]) -> Trajectory:
    n, m = scenario.n_banks, scenario.n_assets
    holdings = scenario.holdings
    traj = Trajectory(n_banks=n, n_assets=m)
    mono_tol = MONOTONICITY_TOL + config.constraint_tol

    prev = scenario.initial_state()
    for bank in sorted(prev.active):
        traj.hitting_times[bank] = 0.0
        logger.debug(f"Bank {bank} starts on the regulatory boundary")
    traj.samples.append(prev)
    if scenario.horizon <= 0:
        return traj

    active: Set[int] = set(prev.active)
    interval_start = prev
    lam_start = _lambda(scenario, prev.pi, _mask(n, active), config.lambda_floor, 0.0) if active else np.ones(m)

    for stop in _stop_times(scenario.horizon, config, sample_times)[1:]:
        while prev.t < stop:
            t = prev.t
            y = np.concatenate([prev.pi, prev.psi])
            steps = max(1, math.ceil((stop - t) / config.base_step - 1e-9))
            t_next = stop if steps == 1 else t + (stop - t) / steps
            y_next = _Regime(scenario, active, config).step(t, y, t_next - t)

            inactive = [i for i in range(n) if i not in active]
            if inactive and np.min(_inactive_margins(scenario, t_next, y_next, inactive)) <= 0.0:
                tau, y_tau, newly = locate_activation(t, y, t_next, inactive, scenario, active, config)
                _check_cap(scenario, interval_start, tau, y_tau, lam_start, config)
                for bank in sorted(newly):
                    traj.hitting_times[bank] = tau
                    logger.debug(f"Bank {bank} activates at t={tau:.10f}")
                active |= newly
                current = _record(scenario, tau, y_tau, active, holdings, config)
                _check_step(prev, current, mono_tol)
                traj.samples.append(current)
                interval_start = current
                lam_start = _lambda(scenario, current.pi, _mask(n, active), config.lambda_floor, tau)
            else:
                current = _record(scenario, t_next, y_next, active, holdings, config)
                _check_step(prev, current, mono_tol)
                if current.t == stop:
                    traj.samples.append(current)
            prev = current

    _check_cap(scenario, interval_start, prev.t, np.concatenate([prev.pi, prev.psi]), lam_start, config)
    return traj



def _mask(n: int, active: Iterable[int]) -> np.ndarray:
    mask = np.zeros(n, dtype=bool)
    mask[list(active)] = True
    return mask


def _record(scenario: Scenario, t: float, y: np.ndarray, active: Set[int], holdings: np.ndarray,
            config: IntegratorConfig) -> SystemState:
    n = scenario.n_banks
    pi, psi = y[:n], y[n:]
    state = SystemState.build(t, pi, scenario.prices(t, pi), psi, holdings, active)
    return renormalize_active(state, scenario, config.constraint_tol)


def _check_cap(scenario: Scenario, start: SystemState, t_end: float, y: np.ndarray,
               lam: np.ndarray, config: IntegratorConfig):
    if scenario.n_assets != 1 or not start.active or t_end <= start.t:
        return
    cap = exponential_liquidation_cap(scenario, start, t_end, lam)
    n = scenario.n_banks
    remaining = scenario.holdings[:, 0] * (1.0 - y[:n])
    slack = 10.0 * config.constraint_tol * np.maximum(scenario.holdings[:, 0], 1.0)
    if np.any(remaining < cap - slack):
        raise MonotonicityViolation("Liquidations outran the exponential cap of their interval", t=t_end)


def simulate(scenario: Scenario, config: Optional[IntegratorConfig] = None,
             sample_times: Optional[Sequence[float]] = None) -> Trajectory:
    """
    Integrate the fire-sale dynamics on [0, T]

    Args:
        scenario: Validated scenario
        config: Integrator settings (defaults scaled to the horizon)
        sample_times: Extra times at which the state must be recorded

    Returns:
        Trajectory sampled on the output grid, the extra times and every hitting time

    Raises:
        ConstraintDrift: If the boundary is lost even after halving the step
        NearSingularRegime: If a regime multiplier Lambda collapses
    """
    config = config or IntegratorConfig.for_horizon(scenario.horizon)
    attempt = config
    for halving in range(config.max_step_halvings + 1):
        try:
            traj = _integrate(scenario, attempt, sample_times)
            logger.info(f"Simulated {scenario.name or 'scenario'} to T={scenario.horizon}: "
                        f"{len(traj.hitting_times)} of {scenario.n_banks} banks activated, "
                        f"{len(traj.samples)} samples")
            return traj
        except (ConstraintDrift, LinearSolveFailure) as e:
            if halving == config.max_step_halvings:
                raise
            logger.warning(f"{e}; retrying with step {attempt.base_step / 2:.3e}")
            attempt = attempt.halved()
            if attempt.event_tol >= attempt.base_step:
                attempt = replace(attempt, event_tol=attempt.base_step / 10.0)
    raise AssertionError("unreachable")

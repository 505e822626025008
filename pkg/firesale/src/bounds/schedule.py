"""
Stress-Test Bound Schedules
Worst-case liquidation and price bounds built one activation at a time
"""

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import brentq

from ..core.exceptions import BranchDomainError, DomainError, NearSingularRegime, NeverActivates, NotExponentialImpact
from ..core.model import AssetSpec, BankBook, Regulation, liability_gap, threshold_order
from ..core.scenario import Scenario
from ..demand.curves import ExponentialImpact, NoImpact, TimeDecay
from .lambert import lambert_w_exp

logger = logging.getLogger(__name__)

DEFAULT_ROOT_TOL = 1e-12
METHODS = ("auto", "closed", "generic")


@dataclass(frozen=True)
class AssetLadder:
    """
    Bound recursion for one asset

    Ranks are the banks holding the asset that can ever liquidate, by
    decreasing q_bar. Per rank: holdings, threshold, bound hitting time
    (math.inf when not reached by the horizon), the frozen regime multiplier
    Lambda~, nu, and the price-factor level f_t(tau~) at activation.
    """

    asset: int
    banks: Tuple[int, ...]
    holdings: Tuple[float, ...]
    thresholds: Tuple[float, ...]
    tau: Tuple[float, ...]
    lam: Tuple[float, ...]
    nu: Tuple[float, ...]
    levels: Tuple[float, ...]
    kappa: float
    impact_b: Optional[float]
    closed_form: bool
    decay: TimeDecay = field(repr=False, compare=False)

    @property
    def size(self) -> int:
        return len(self.banks)

    def log_nu(self, rank: int) -> float:
        """log nu of a 1-based rank, computed without overflow"""
        return _log_nu(self.lam[rank - 1], self.levels[rank - 1], self.kappa)

    def liquidations(self, t: float) -> np.ndarray:
        """Gamma~ per rank at time t"""
        return _ladder_liquidations(t, self.holdings, self.tau, self.lam, self.levels, self.kappa, self.decay)


def _ladder_liquidations(t: float, holdings: Sequence[float], tau: Sequence[float], lam: Sequence[float],
                         levels: Sequence[float], kappa: float, decay: TimeDecay) -> np.ndarray:
    """
    Product form Gamma~_i(t) = s_i (1 - prod_{j >= i} (f(t ^ tau_{j+1}) / f(t ^ tau_j))^(kappa / Lambda_j))
    """
    k = len(tau)
    out = np.zeros(len(holdings))
    log_ft = math.log(decay.value(t))
    # exponent[j] = (kappa / Lambda_j) * log(f(t ^ tau_{j+1}) / f(t ^ tau_j)), zero for ranks not yet active
    exponent = np.zeros(k)
    for j in range(k):
        if tau[j] > t:
            break
        upper = math.log(levels[j + 1]) if j + 1 < k and tau[j + 1] <= t else log_ft
        exponent[j] = (kappa / lam[j]) * (upper - math.log(levels[j]))
    tail = np.cumsum(exponent[::-1])[::-1]
    for i in range(k):
        if tau[i] > t:
            break
        out[i] = holdings[i] * -math.expm1(tail[i])
    return out


# ---------------------------------------------------------------------------
# Ladder construction
# ---------------------------------------------------------------------------

def _log_nu(lam: float, level: float, kappa: float) -> float:
    """log of nu = (1 - Lambda~) / f_t(tau~)^(kappa / Lambda~)"""
    if lam >= 1.0:
        return -math.inf
    return math.log1p(-lam) - (kappa / lam) * math.log(level)


def _nu(lam: float, level: float, kappa: float) -> float:
    log_nu = _log_nu(lam, level, kappa)
    return math.exp(log_nu) if log_nu < 700.0 else math.inf


def _lambda_tilde(kappa: float, remaining: float, log_slope: float, asset: int, rank: int) -> float:
    lam = 1.0 + kappa * remaining * log_slope
    if lam <= 0.0:
        raise NearSingularRegime(f"Bound multiplier for asset {asset} at rank {rank} is {lam:.3e}; "
                                 "risk-weights are not admissible")
    return lam


def _closed_form_level(x: float, prev_level: float, prev_lam: float, prev_log_nu: float,
                       kappa: float) -> float:
    """Activation level F_i from the previous rank's Lambda~ and nu (exponential impact)"""
    if prev_log_nu == -math.inf:
        logger.debug("nu vanishes; using the logarithmic inversion")
        return min(math.exp(x), prev_level)
    c = kappa / prev_lam
    log_arg = prev_log_nu - math.log(prev_lam) + c * x
    try:
        w = lambert_w_exp(log_arg)
    except DomainError as e:
        raise BranchDomainError(f"Lambert W argument out of range: {e}")
    return min(math.exp(x - w / c), prev_level)


def _closed_ladder(asset: int, spec: AssetSpec, reg: Regulation, banks: List[int],
                   holdings: List[float], thresholds: List[float], horizon: float) -> AssetLadder:
    impact = spec.demand.impact_part
    decay = spec.demand.time_part
    b = impact.b
    kappa = spec.kappa(reg)
    tau: List[float] = []
    lam: List[float] = []
    nu: List[float] = []
    levels: List[float] = []
    sold_before = 0.0
    remaining = 0.0
    prev_level, prev_lam, prev_log_nu = 1.0, 1.0, -math.inf
    prev_tau = 0.0
    for rank, (s_i, q_bar) in enumerate(zip(holdings, thresholds), start=1):
        x = math.log(q_bar) + b * sold_before
        level = min(q_bar, 1.0) if rank == 1 else _closed_form_level(x, prev_level, prev_lam, prev_log_nu, kappa)
        if rank > 1:
            remaining *= (level / prev_level) ** (kappa / prev_lam)
        remaining += s_i
        lam_i = _lambda_tilde(kappa, remaining, -b, asset, rank)
        log_nu = _log_nu(lam_i, level, kappa)
        t_i = decay.inverse(level)
        t_i = max(prev_tau, t_i) if t_i <= horizon else math.inf
        tau.append(t_i)
        lam.append(lam_i)
        nu.append(_nu(lam_i, level, kappa))
        levels.append(level)
        sold_before += s_i
        prev_level, prev_lam, prev_log_nu, prev_tau = level, lam_i, log_nu, t_i
    return AssetLadder(asset=asset, banks=tuple(banks), holdings=tuple(holdings), thresholds=tuple(thresholds),
                       tau=tuple(tau), lam=tuple(lam), nu=tuple(nu), levels=tuple(levels), kappa=kappa,
                       impact_b=b, closed_form=True, decay=decay)


def _generic_ladder(asset: int, spec: AssetSpec, reg: Regulation, banks: List[int],
                    holdings: List[float], thresholds: List[float], horizon: float,
                    root_tol: float) -> AssetLadder:
    impact = spec.demand.impact_part
    decay = spec.demand.time_part
    kappa = spec.kappa(reg)
    tau: List[float] = []
    lam: List[float] = []
    levels: List[float] = []
    prev_tau = 0.0
    for rank, (s_i, q_bar) in enumerate(zip(holdings, thresholds), start=1):
        def gap(t: float) -> float:
            sold = _ladder_liquidations(t, holdings, tau, lam, levels, kappa, decay).sum()
            return decay.value(t) * impact.value(sold) - q_bar

        if gap(prev_tau) <= 0.0:
            t_i = prev_tau
        elif gap(horizon) > 0.0:
            break
        else:
            t_i = brentq(gap, prev_tau, horizon, xtol=root_tol, rtol=4 * np.finfo(float).eps)
        sold = _ladder_liquidations(t_i, holdings, tau, lam, levels, kappa, decay)
        units = float(sold.sum())
        remaining = float(sum(holdings[:rank]) - units)
        tau.append(t_i)
        levels.append(decay.value(t_i))
        lam.append(_lambda_tilde(kappa, remaining, float(impact.log_derivative(units)), asset, rank))
        prev_tau = t_i

    reached = len(tau)
    missing = len(holdings) - reached
    nu = [_nu(l, f, kappa) for l, f in zip(lam, levels)]
    return AssetLadder(asset=asset, banks=tuple(banks), holdings=tuple(holdings), thresholds=tuple(thresholds),
                       tau=tuple(tau) + (math.inf,) * missing, lam=tuple(lam) + (math.nan,) * missing,
                       nu=tuple(nu) + (math.nan,) * missing, levels=tuple(levels) + (math.nan,) * missing,
                       kappa=kappa, impact_b=getattr(impact, "b", None), closed_form=False, decay=decay)


# ---------------------------------------------------------------------------
# Schedule
# ---------------------------------------------------------------------------

def decomposition_weights(book: BankBook, assets: Sequence[AssetSpec], reg: Regulation) -> np.ndarray:
    """
    Split of a bank's obligations across its assets

    c_ik = (1 - alpha_k theta_min) s_ik / sum_l (1 - alpha_l theta_min) s_il;
    each single-asset piece (c x, s_k, c ell, c p_bar) has the bank's q_bar.

    Raises:
        NeverActivates: If the bank can never reach the threshold
    """
    if liability_gap(book, reg) <= 0.0:
        raise NeverActivates(f"{book.name or 'bank'} never liquidates; decomposition weights are undefined")
    return _raw_weights(book.holdings, assets, reg)


def _raw_weights(holdings: np.ndarray, assets: Sequence[AssetSpec], reg: Regulation) -> np.ndarray:
    weighted = np.array([(1.0 - a.alpha * reg.theta_min) for a in assets]) * holdings
    total = weighted.sum(axis=-1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(total > 0, weighted / total, 0.0)


@dataclass(frozen=True, eq=False)
class BoundSchedule:
    """Worst-case liquidation schedule of a scenario"""

    scenario: Scenario = field(repr=False, compare=False)
    order: Tuple[int, ...]
    thresholds: np.ndarray
    weights: np.ndarray
    ladders: Tuple[AssetLadder, ...]
    method: str

    @property
    def multi_asset(self) -> bool:
        return len(self.ladders) > 1

    def rank_of(self, bank: int, asset: int = 0) -> Optional[int]:
        """1-based rank of a bank in an asset's ladder"""
        ladder = self.ladders[asset]
        return ladder.banks.index(bank) + 1 if bank in ladder.banks else None

    def hitting_time(self, bank: int) -> float:
        """Earliest bound activation of a bank over the assets it holds (math.inf if none)"""
        times = [ladder.tau[ladder.banks.index(bank)] for ladder in self.ladders if bank in ladder.banks]
        return min(times) if times else math.inf

    def hitting_times(self) -> np.ndarray:
        return np.array([self.hitting_time(i) for i in range(self.scenario.n_banks)])


def _ladder_members(scenario: Scenario, asset: int, q_bar: np.ndarray) -> List[int]:
    s = scenario.holdings[:, asset]
    return [i for i in threshold_order(list(q_bar)) if s[i] > 0.0 and q_bar[i] > 0.0]


def _supports_closed_form(spec: AssetSpec) -> bool:
    return isinstance(spec.demand.impact_part, (ExponentialImpact, NoImpact))


def build_bound_schedule(scenario: Scenario, method: str = "auto",
                         root_tol: float = DEFAULT_ROOT_TOL) -> BoundSchedule:
    """
    Build the worst-case bound schedule

    Args:
        scenario: Validated scenario
        method: 'closed' (exponential impact only), 'generic' (root finding), or 'auto'
        root_tol: Absolute time tolerance of the generic root finder

    Returns:
        BoundSchedule with one ladder per asset
    """
    if method not in METHODS:
        raise ValueError(f"Unknown bound method {method!r}; expected one of {METHODS}")
    reg = scenario.regulation
    q_bar = scenario.thresholds()
    ladders = []
    for k, spec in enumerate(scenario.assets):
        members = _ladder_members(scenario, k, q_bar)
        holdings = [float(scenario.holdings[i, k]) for i in members]
        thresholds = [float(q_bar[i]) for i in members]
        closed = _supports_closed_form(spec) if method == "auto" else method == "closed"
        if closed and not _supports_closed_form(spec):
            raise NotExponentialImpact(f"Closed-form bounds need exponential price impact (asset {k})")
        if closed:
            ladder = _closed_ladder(k, spec, reg, members, holdings, thresholds, scenario.horizon)
        else:
            ladder = _generic_ladder(k, spec, reg, members, holdings, thresholds, scenario.horizon, root_tol)
        ladders.append(ladder)

    reached = sum(1 for ladder in ladders for t in ladder.tau if t < math.inf)
    logger.info(f"Built {'closed-form' if all(l.closed_form for l in ladders) else 'generic'} bound schedule "
                f"for {scenario.n_banks} banks and {scenario.n_assets} assets ({reached} bound activations)")
    if len(ladders) > 1:
        logger.info("Multi-asset bounds come from per-asset decomposition and are typically loose")
    return BoundSchedule(scenario=scenario, order=tuple(threshold_order(list(q_bar))), thresholds=q_bar,
                         weights=_raw_weights(scenario.holdings, scenario.assets, reg),
                         ladders=tuple(ladders), method=method)


def bounded_liquidations(schedule: BoundSchedule, t: float) -> Tuple[np.ndarray, np.ndarray]:
    """
    Worst-case liquidations at time t

    Returns:
        (Gamma~ as an (n, m) matrix, Pi~ per bank); Pi~_i is the largest
        fraction over the bank's assets and Gamma~_ik = s_ik Pi~_i
    """
    scenario = schedule.scenario
    s = scenario.holdings
    frac = np.zeros_like(s)
    for ladder in schedule.ladders:
        sold = ladder.liquidations(t)
        for rank, bank in enumerate(ladder.banks):
            frac[bank, ladder.asset] = sold[rank] / ladder.holdings[rank]
    pi = frac.max(axis=1) if frac.size else np.zeros(scenario.n_banks)
    return s * pi[:, None], pi


def bounded_price(schedule: BoundSchedule, t: float, asset: int = 0) -> float:
    """Worst-case price f_t(t) f_Gamma(sum_i Gamma~_i(t)) of one asset"""
    gamma, _ = bounded_liquidations(schedule, t)
    curve = schedule.scenario.assets[asset].demand
    return curve.price(t, float(gamma[:, asset].sum()))


def exp_hitting_time(schedule: BoundSchedule, rank: int, asset: int = 0) -> float:
    """
    Closed-form bound hitting time of a 1-based rank under exponential impact

    Evaluated from the previous rank's Lambda~ and nu through Lambert W;
    rank 1 is f_t^{-1}(q_bar_1).

    Raises:
        BranchDomainError: If the Lambert W argument is below -1/e
    """
    ladder = schedule.ladders[asset]
    spec = schedule.scenario.assets[asset]
    if not _supports_closed_form(spec):
        raise ValueError(f"Closed-form hitting times need exponential price impact (asset {asset})")
    if rank == 1:
        level = min(ladder.thresholds[0], 1.0)
    else:
        b = spec.demand.impact_part.b
        x = math.log(ladder.thresholds[rank - 1]) + b * sum(ladder.holdings[:rank - 1])
        level = _closed_form_level(x, ladder.levels[rank - 2], ladder.lam[rank - 2],
                                   ladder.log_nu(rank - 1), ladder.kappa)
    t = ladder.decay.inverse(level)
    if rank > 1:
        t = max(t, ladder.tau[rank - 2])
    return t if t <= schedule.scenario.horizon else math.inf

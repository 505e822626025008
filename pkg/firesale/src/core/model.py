"""
Banking Book Model
Regulation, balance sheets, system state and the capital-ratio arithmetic
"""

import logging
from dataclasses import dataclass, field, replace
from typing import TYPE_CHECKING, Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .exceptions import InadmissibleScenario, NoTradableAssets, ZeroRiskWeightedAssets

if TYPE_CHECKING:
    from ..demand.curves import DemandCurve

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Regulation:
    """Minimal risk-weighted capital ratio every bank must keep"""

    theta_min: float

    def __post_init__(self):
        if not 0.0 < self.theta_min < 1.0:
            raise InadmissibleScenario(f"theta_min must lie in (0, 1), got {self.theta_min}")


def leverage_regulation(lambda_max: float) -> Regulation:
    """
    Express a maximal leverage requirement as a capital-ratio regulation

    With every risk-weight set to 1 (tradable and nontradable), the ratio
    constraint theta >= 1/lambda_max is the leverage constraint.

    Args:
        lambda_max: Maximal ratio of assets to equity, > 1

    Returns:
        Regulation with theta_min = 1 / lambda_max
    """
    if lambda_max <= 1.0:
        raise InadmissibleScenario(f"Maximal leverage must exceed 1, got {lambda_max}")
    return Regulation(theta_min=1.0 / lambda_max)


@dataclass(frozen=True)
class BankBook:
    """One bank's balance sheet at time zero (initial prices are 1)"""

    x: float
    s: Tuple[float, ...]
    ell: float = 0.0
    p_bar: float = 0.0
    alpha_ell: float = 0.0
    name: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "s", tuple(float(v) for v in self.s))
        label = self.name or "bank"
        for attr in ("x", "ell", "p_bar", "alpha_ell"):
            if getattr(self, attr) < 0:
                raise InadmissibleScenario(f"{label}: {attr} must be nonnegative, got {getattr(self, attr)}")
        if any(v < 0 for v in self.s):
            raise InadmissibleScenario(f"{label}: tradable holdings must be nonnegative, got {self.s}")

    @property
    def holdings(self) -> np.ndarray:
        return np.asarray(self.s, dtype=float)


@dataclass(frozen=True)
class AssetSpec:
    """A tradable illiquid asset"""

    alpha: float
    market_cap: float
    demand: "DemandCurve"
    name: Optional[str] = None

    def __post_init__(self):
        if self.alpha <= 0:
            raise InadmissibleScenario(f"Risk-weight must be positive, got {self.alpha}")
        if self.market_cap <= 0:
            raise InadmissibleScenario(f"Market cap must be positive, got {self.market_cap}")

    def kappa(self, reg: Regulation) -> float:
        """(1 - alpha theta_min) / (alpha theta_min), the liquidation leverage of the asset"""
        at = self.alpha * reg.theta_min
        return (1.0 - at) / at


def liability_gap(book: BankBook, reg: Regulation) -> float:
    """Obligations the tradable book must cover at the threshold: p_bar - x - (1 - alpha_ell theta_min) ell"""
    return book.p_bar - book.x - (1.0 - book.alpha_ell * reg.theta_min) * book.ell


def capital_ratio(book: BankBook, assets: Sequence[AssetSpec], pi: float,
                  q: Sequence[float], psi: float) -> float:
    """
    Risk-weighted capital ratio of one bank

    Args:
        book: Bank balance sheet
        assets: Tradable assets (same order as book.s)
        pi: Fraction of the tradable book liquidated so far
        q: Current asset prices
        psi: Cash raised by liquidations so far

    Returns:
        theta = (x + psi + sum (s - Gamma) q + ell - p_bar)^+ / (sum alpha (s - Gamma) q + alpha_ell ell)

    Raises:
        ZeroRiskWeightedAssets: If the bank carries no risk-weighted assets
    """
    remaining = book.holdings * (1.0 - pi) * np.asarray(q, dtype=float)
    alpha = np.array([a.alpha for a in assets])
    rwa = float(alpha @ remaining) + book.alpha_ell * book.ell
    if rwa <= 0.0:
        raise ZeroRiskWeightedAssets(f"{book.name or 'bank'} has no risk-weighted assets")
    capital = book.x + psi + float(remaining.sum()) + book.ell - book.p_bar
    return max(capital, 0.0) / rwa


def threshold_price(book: BankBook, assets: Sequence[AssetSpec], reg: Regulation) -> float:
    """
    Uniform price level at which the bank reaches theta_min with its initial book

    Returns:
        q_bar; values <= 0 mean the bank never liquidates

    Raises:
        NoTradableAssets: If the bank holds no tradable asset
    """
    weight = sum((1.0 - a.alpha * reg.theta_min) * s for a, s in zip(assets, book.s))
    if weight <= 0.0:
        raise NoTradableAssets(f"{book.name or 'bank'} holds no tradable assets")
    return liability_gap(book, reg) / weight


def activation_margin(book: BankBook, assets: Sequence[AssetSpec], reg: Regulation,
                      q: Sequence[float]) -> float:
    """Currency margin to the threshold; the bank activates once it is <= 0"""
    value = sum((1.0 - a.alpha * reg.theta_min) * s * qk for a, s, qk in zip(assets, book.s, q))
    return value - liability_gap(book, reg)


def threshold_order(thresholds: Sequence[float]) -> List[int]:
    """Bank indices by decreasing q_bar, ties broken by input index"""
    return sorted(range(len(thresholds)), key=lambda i: (-thresholds[i], i))


@dataclass(frozen=True)
class SystemState:
    """Snapshot of the whole system at time t"""

    t: float
    pi: np.ndarray
    gamma: np.ndarray
    q: np.ndarray
    psi: np.ndarray
    active: FrozenSet[int] = field(default_factory=frozenset)

    @classmethod
    def build(cls, t: float, pi: np.ndarray, q: np.ndarray, psi: np.ndarray,
              holdings: np.ndarray, active: Iterable[int] = ()) -> "SystemState":
        """Assemble a state; liquidated units follow from proportional liquidation"""
        pi = np.array(pi, dtype=float)
        return cls(t=float(t), pi=pi, gamma=holdings * pi[:, None], q=np.array(q, dtype=float),
                   psi=np.array(psi, dtype=float), active=frozenset(active))

    def with_fractions(self, pi: np.ndarray, q: np.ndarray, holdings: np.ndarray) -> "SystemState":
        pi = np.array(pi, dtype=float)
        return replace(self, pi=pi, gamma=holdings * pi[:, None], q=np.array(q, dtype=float))

    @property
    def n_banks(self) -> int:
        return self.pi.shape[0]


@dataclass
class Trajectory:
    """Sampled states on [0, T] with exact hitting times"""

    samples: List[SystemState] = field(default_factory=list)
    hitting_times: Dict[int, float] = field(default_factory=dict)
    n_banks: int = 0
    n_assets: int = 0

    @property
    def terminal(self) -> Optional[SystemState]:
        return self.samples[-1] if self.samples else None

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.samples])

    @property
    def prices(self) -> np.ndarray:
        """(samples, m) array of prices"""
        if not self.samples:
            return np.empty((0, self.n_assets))
        return np.vstack([s.q for s in self.samples])

    @property
    def fractions(self) -> np.ndarray:
        """(samples, n) array of liquidated fractions"""
        if not self.samples:
            return np.empty((0, self.n_banks))
        return np.vstack([s.pi for s in self.samples])

    @property
    def proceeds(self) -> np.ndarray:
        if not self.samples:
            return np.empty((0, self.n_banks))
        return np.vstack([s.psi for s in self.samples])

    def hitting_time(self, bank: int) -> Optional[float]:
        return self.hitting_times.get(bank)

    def state_at(self, t: float, atol: float = 1e-12) -> SystemState:
        """Sample recorded at time t"""
        times = self.times
        k = int(np.searchsorted(times, t - atol))
        if k < len(times) and abs(times[k] - t) <= atol:
            return self.samples[k]
        raise KeyError(f"No sample recorded at t={t}")

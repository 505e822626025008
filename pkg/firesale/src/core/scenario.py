"""
Scenario
A complete fire-sale problem: regulation, banks, assets and horizon
"""

import logging
from dataclasses import dataclass, field, replace
from typing import Any, Optional, Sequence, Tuple

import numpy as np

from .exceptions import InadmissibleScenario, NoTradableAssets
from .model import (
    AssetSpec,
    BankBook,
    Regulation,
    SystemState,
    liability_gap,
    threshold_order,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Scenario:
    """
    Immutable fire-sale scenario

    Banks keep their input order; array views (holdings, risk-weights,
    liability gaps) are computed once at construction.
    """

    regulation: Regulation
    banks: Tuple[BankBook, ...]
    assets: Tuple[AssetSpec, ...]
    horizon: float
    name: Optional[str] = None
    _holdings: Any = field(init=False, repr=False, compare=False)
    _gaps: Any = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "banks", tuple(self.banks))
        object.__setattr__(self, "assets", tuple(self.assets))
        if self.horizon < 0:
            raise InadmissibleScenario(f"Horizon must be nonnegative, got {self.horizon}")
        if not self.assets:
            raise InadmissibleScenario("Scenario needs at least one tradable asset")
        m = len(self.assets)
        for i, bank in enumerate(self.banks):
            if len(bank.s) != m:
                raise InadmissibleScenario(
                    f"Bank {i} lists {len(bank.s)} holdings but the scenario has {m} assets")
        holdings = np.array([b.s for b in self.banks], dtype=float).reshape(len(self.banks), m)
        holdings.setflags(write=False)
        gaps = np.array([liability_gap(b, self.regulation) for b in self.banks], dtype=float)
        gaps.setflags(write=False)
        object.__setattr__(self, "_holdings", holdings)
        object.__setattr__(self, "_gaps", gaps)

    # -- shapes and parameter views -------------------------------------------------

    @property
    def n_banks(self) -> int:
        return len(self.banks)

    @property
    def n_assets(self) -> int:
        return len(self.assets)

    @property
    def holdings(self) -> np.ndarray:
        """(n, m) tradable units s_ik"""
        return self._holdings

    @property
    def liability_gaps(self) -> np.ndarray:
        return self._gaps

    @property
    def alpha(self) -> np.ndarray:
        return np.array([a.alpha for a in self.assets])

    @property
    def weighted_alpha(self) -> np.ndarray:
        """alpha_k theta_min"""
        return self.alpha * self.regulation.theta_min

    @property
    def sale_weight(self) -> np.ndarray:
        """1 - alpha_k theta_min"""
        return 1.0 - self.weighted_alpha

    @property
    def kappa(self) -> np.ndarray:
        return self.sale_weight / self.weighted_alpha

    # -- thresholds ------------------------------------------------------------------

    def thresholds(self) -> np.ndarray:
        """q_bar for every bank (input order)"""
        weights = self._holdings @ self.sale_weight
        if np.any(weights <= 0):
            bad = int(np.argmax(weights <= 0))
            raise NoTradableAssets(f"Bank {bad} holds no tradable assets")
        return self._gaps / weights

    def threshold_order(self) -> Sequence[int]:
        return threshold_order(list(self.thresholds()))

    def margins(self, q: np.ndarray) -> np.ndarray:
        """activation_margin for every bank at price vector q"""
        return self._holdings @ (self.sale_weight * q) - self._gaps

    # -- prices and ratios -----------------------------------------------------------

    def liquidated_units(self, pi: np.ndarray) -> np.ndarray:
        """Total units of each asset sold, sum_j s_jk pi_j"""
        return self._holdings.T @ pi

    def prices(self, t: float, pi: np.ndarray) -> np.ndarray:
        """Mark-to-market prices implied by the inverse demand curves"""
        units = self.liquidated_units(pi)
        return np.array([a.demand.price(t, g) for a, g in zip(self.assets, units)])

    def capital_ratios(self, pi: np.ndarray, q: np.ndarray, psi: np.ndarray) -> np.ndarray:
        """Vectorized capital ratio over all banks"""
        remaining = self._holdings * (1.0 - pi)[:, None] * q[None, :]
        rwa = remaining @ self.alpha + np.array([b.alpha_ell * b.ell for b in self.banks])
        capital = (np.array([b.x + b.ell - b.p_bar for b in self.banks])
                   + psi + remaining.sum(axis=1))
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(rwa > 0, np.maximum(capital, 0.0) / rwa, np.inf)

    def initial_state(self) -> SystemState:
        n = self.n_banks
        pi = np.zeros(n)
        q = self.prices(0.0, pi)
        # banks starting exactly on the boundary are active from t = 0
        slack = 1e-14 * np.maximum(1.0, np.abs(self._gaps))
        active = np.nonzero(self.margins(q) <= slack)[0]
        return SystemState.build(0.0, pi, q, np.zeros(n), self._holdings, active.tolist())

    # -- derived scenarios -----------------------------------------------------------

    def with_horizon(self, horizon: float) -> "Scenario":
        return replace(self, horizon=horizon)

    def with_time_decays(self, decays: Sequence[Any], horizon: Optional[float] = None) -> "Scenario":
        """Same books with each asset's time decay replaced"""
        assets = tuple(replace(a, demand=a.demand.with_time_part(d)) for a, d in zip(self.assets, decays))
        return replace(self, assets=assets, horizon=self.horizon if horizon is None else horizon)

    def aggregate(self) -> "Scenario":
        """Single bank holding the whole system's books"""
        total_ell = sum(b.ell for b in self.banks)
        weighted_ell = sum(b.alpha_ell * b.ell for b in self.banks)
        book = BankBook(
            x=sum(b.x for b in self.banks),
            s=tuple(self._holdings.sum(axis=0)),
            ell=total_ell,
            p_bar=sum(b.p_bar for b in self.banks),
            alpha_ell=weighted_ell / total_ell if total_ell > 0 else 0.0,
            name="aggregate",
        )
        return replace(self, banks=(book,), name=f"{self.name or 'scenario'}-aggregate")

"""
Shared fixtures for fire-sale engine tests
"""

import math

import numpy as np
import pytest

from firesale.src.config.engine_config import reset_engine_config
from firesale.src.core.model import AssetSpec, BankBook, Regulation
from firesale.src.core.scenario import Scenario
from firesale.src.demand.curves import (
    DemandCurve,
    ExponentialDecay,
    ExponentialImpact,
    admissible_impact_bound,
)
from firesale.src.scenarios.case_studies import HIGH_IMPACT, TWENTY_BANK_CAP, twenty_bank_scenario


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running case-study and Monte Carlo checks")


@pytest.fixture(autouse=True)
def reset_config():
    """Reset config singleton before each test"""
    reset_engine_config()
    yield
    reset_engine_config()


@pytest.fixture
def no_impact_system() -> Scenario:
    return twenty_bank_scenario(0.0)


@pytest.fixture
def mid_impact_system() -> Scenario:
    return twenty_bank_scenario(0.7 / TWENTY_BANK_CAP)


@pytest.fixture
def high_impact_system() -> Scenario:
    return twenty_bank_scenario(HIGH_IMPACT)


def _random_single_asset(rng: np.random.Generator, n_banks: int, horizon: float = 1.0,
                         on_boundary: bool = False) -> Scenario:
    reg = Regulation(theta_min=0.1)
    alpha = float(rng.uniform(2.0, 9.0))
    weight = 1.0 - alpha * reg.theta_min
    holdings = rng.uniform(0.5, 2.0, size=n_banks)
    q_bar = np.ones(n_banks) if on_boundary else rng.uniform(0.6, 1.0, size=n_banks)
    cash = rng.uniform(0.0, 0.5, size=n_banks)
    banks = tuple(BankBook(x=float(x), s=(float(s),), p_bar=float(q * weight * s + x))
                  for x, s, q in zip(cash, holdings, q_bar))
    market_cap = float(holdings.sum() * rng.uniform(1.2, 3.0))
    b = float(rng.uniform(0.0, 0.8)) * admissible_impact_bound(alpha, market_cap, reg)
    curve = DemandCurve(time_part=ExponentialDecay(rate=float(rng.uniform(0.05, 0.5)), freeze_at=horizon),
                        impact_part=ExponentialImpact(b))
    asset = AssetSpec(alpha=alpha, market_cap=market_cap, demand=curve)
    return Scenario(regulation=reg, banks=banks, assets=(asset,), horizon=horizon, name="random")


@pytest.fixture
def random_scenario():
    """
    Factory of admissible one-asset scenarios with exponential curves

    Thresholds are drawn in (0.6, 1]; on_boundary=True puts every bank at
    theta_min from the start.
    """
    return _random_single_asset


def _random_multi_asset(rng: np.random.Generator, n_banks: int, n_assets: int,
                        horizon: float = 1.0) -> Scenario:
    reg = Regulation(theta_min=0.1)
    alpha = rng.uniform(2.0, 8.0, size=n_assets)
    weight = 1.0 - alpha * reg.theta_min
    holdings = rng.uniform(0.5, 2.0, size=(n_banks, n_assets))
    q_bar = rng.uniform(0.6, 1.0, size=n_banks)
    cash = rng.uniform(0.0, 0.5, size=n_banks)
    banks = tuple(BankBook(x=float(x), s=tuple(float(v) for v in s), p_bar=float(q * (weight @ s) + x))
                  for x, s, q in zip(cash, holdings, q_bar))
    assets = []
    for k in range(n_assets):
        market_cap = float(holdings[:, k].sum() * rng.uniform(1.2, 3.0))
        b = float(rng.uniform(0.0, 0.5)) * admissible_impact_bound(float(alpha[k]), market_cap, reg)
        curve = DemandCurve(time_part=ExponentialDecay(rate=float(rng.uniform(0.05, 0.5)), freeze_at=horizon),
                            impact_part=ExponentialImpact(b))
        assets.append(AssetSpec(alpha=float(alpha[k]), market_cap=market_cap, demand=curve))
    return Scenario(regulation=reg, banks=banks, assets=tuple(assets), horizon=horizon, name="random-multi")


@pytest.fixture
def random_multi_asset_scenario():
    """Factory of admissible scenarios where every bank holds every asset"""
    return _random_multi_asset


@pytest.fixture
def no_impact_times():
    """Hitting times -log(q_bar)/a of a scenario without price impact"""
    def times(scenario: Scenario) -> list:
        rate = scenario.assets[0].demand.time_part.rate
        out = []
        for q in scenario.thresholds():
            t = -math.log(q) / rate if q > 0 else math.inf
            out.append(t if t <= scenario.horizon else math.inf)
        return out
    return times

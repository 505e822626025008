"""
Scenario Validator
Checks a scenario against every admissibility condition before it is simulated
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from ..core.exceptions import InadmissibleScenario
from ..core.scenario import Scenario
from ..demand.curves import AlphaInterval, admissible_alpha_interval, admissible_impact_bound, check_monotonicity_condition

logger = logging.getLogger(__name__)


@dataclass
class CheckResult:
    """Outcome of one admissibility check"""

    check: str
    passed: bool
    message: str = ""
    bank: Optional[int] = None
    asset: Optional[int] = None
    interval: Optional[AlphaInterval] = None

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {"check": self.check, "passed": self.passed, "message": self.message}
        if self.bank is not None:
            data["bank"] = self.bank
        if self.asset is not None:
            data["asset"] = self.asset
        if self.interval is not None:
            data["admissible_alpha"] = [self.interval.lower, self.interval.upper]
        return data


@dataclass
class ValidationReport:
    """All check results of one validation run"""

    scenario_name: Optional[str]
    checks: List[CheckResult] = field(default_factory=list)
    impact_bounds: List[float] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failures(self) -> List[CheckResult]:
        return [c for c in self.checks if not c.passed]

    def issues(self) -> List[str]:
        return [c.message for c in self.failures]

    def raise_if_failed(self):
        if not self.passed:
            raise InadmissibleScenario("; ".join(self.issues()), report=self)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "scenario": self.scenario_name,
            "passed": self.passed,
            "checks": [c.to_dict() for c in self.checks],
            "admissible_impact_b": self.impact_bounds,
        }


class ScenarioValidator:
    """Runs the admissibility checks of a fire-sale scenario"""

    def __init__(self, monotonicity_grid: int = 10_000, monotonicity_tol: float = 1e-10):
        self.monotonicity_grid = monotonicity_grid
        self.monotonicity_tol = monotonicity_tol

    @classmethod
    def from_engine_config(cls, config: Dict[str, Any]) -> "ScenarioValidator":
        section = config.get("demand", {})
        return cls(monotonicity_grid=section.get("monotonicity_grid", 10_000),
                   monotonicity_tol=section.get("monotonicity_tol", 1e-10))

    def validate(self, scenario: Scenario) -> ValidationReport:
        """
        Run every check; never raises for inadmissible input

        Returns:
            ValidationReport listing each check with the offending bank or asset
        """
        report = ValidationReport(scenario_name=scenario.name)
        report.checks.append(self._check_horizon(scenario))
        for k in range(scenario.n_assets):
            report.checks.extend(self._check_asset(scenario, k))
            asset = scenario.assets[k]
            report.impact_bounds.append(admissible_impact_bound(asset.alpha, asset.market_cap, scenario.regulation))
        report.checks.extend(self._check_market_caps(scenario))
        report.checks.extend(self._check_banks(scenario))

        if report.passed:
            logger.info(f"Scenario {scenario.name or ''} passed {len(report.checks)} checks")
        else:
            logger.info(f"Scenario {scenario.name or ''} failed {len(report.failures)} of {len(report.checks)} checks")
        return report

    def validate_data(self, scenario: Scenario) -> Tuple[bool, List[str]]:
        """(is_valid, list_of_issues)"""
        report = self.validate(scenario)
        return report.passed, report.issues()

    # -- individual checks -----------------------------------------------------------

    def _check_horizon(self, scenario: Scenario) -> CheckResult:
        if scenario.horizon > 0:
            return CheckResult("horizon", True)
        return CheckResult("horizon", False, f"Horizon must be positive, got {scenario.horizon}")

    def _check_asset(self, scenario: Scenario, k: int) -> List[CheckResult]:
        reg = scenario.regulation
        asset = scenario.assets[k]
        results = []

        at = asset.alpha * reg.theta_min
        if at >= 1.0:
            results.append(CheckResult("risk_weight", False,
                                       f"Asset {k}: alpha*theta_min = {at:.6g} >= 1", asset=k))
        else:
            results.append(CheckResult("risk_weight", True, asset=k))

        interval = admissible_alpha_interval(asset.demand, asset.market_cap, reg)
        if interval.contains(asset.alpha):
            results.append(CheckResult("alpha_interval", True, asset=k, interval=interval))
        else:
            results.append(CheckResult(
                "alpha_interval", False,
                f"Asset {k}: alpha = {asset.alpha:.6g} outside admissible interval {interval}",
                asset=k, interval=interval))

        mono = check_monotonicity_condition(asset.demand, asset.market_cap,
                                            grid_points=self.monotonicity_grid, tol=self.monotonicity_tol)
        if mono.passed:
            results.append(CheckResult("monotonicity", True, asset=k))
        else:
            results.append(CheckResult(
                "monotonicity", False,
                f"Asset {k}: monotonicity condition fails at Gamma = {mono.violating_gamma:.6g}", asset=k))
        return results

    def _check_market_caps(self, scenario: Scenario) -> List[CheckResult]:
        held = scenario.holdings.sum(axis=0)
        results = []
        for k, asset in enumerate(scenario.assets):
            if held[k] > asset.market_cap:
                results.append(CheckResult(
                    "market_cap", False,
                    f"Asset {k}: banks hold {held[k]:.6g} units but market cap is {asset.market_cap:.6g}",
                    asset=k))
            else:
                results.append(CheckResult("market_cap", True, asset=k))
        return results

    def _check_banks(self, scenario: Scenario) -> List[CheckResult]:
        reg = scenario.regulation
        results = []
        weights = scenario.holdings @ scenario.sale_weight
        n = scenario.n_banks
        ratios = scenario.capital_ratios(np.zeros(n), np.ones(scenario.n_assets), np.zeros(n))
        for i, bank in enumerate(scenario.banks):
            label = bank.name or f"Bank {i}"
            if weights[i] <= 0:
                results.append(CheckResult("tradable_assets", False, f"{label} holds no tradable assets", bank=i))
                continue
            rwa = float(np.dot(scenario.holdings[i], scenario.alpha)) + bank.alpha_ell * bank.ell
            if rwa <= 0:
                results.append(CheckResult("risk_weighted_assets", False,
                                           f"{label} has no risk-weighted assets", bank=i))
                continue
            # banks exactly on the boundary are admissible and start liquidating at t = 0
            if ratios[i] < reg.theta_min * (1.0 - 1e-12):
                results.append(CheckResult(
                    "initial_capital_ratio", False,
                    f"{label}: initial capital ratio {ratios[i]:.6g} below theta_min {reg.theta_min:.6g}",
                    bank=i))
            else:
                results.append(CheckResult("initial_capital_ratio", True, bank=i))
        return results


def validate(scenario: Scenario, config: Optional[Dict[str, Any]] = None) -> ValidationReport:
    """Validate with the demand-check settings of an engine configuration"""
    return ScenarioValidator.from_engine_config(config or {}).validate(scenario)

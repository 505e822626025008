"""
Case Studies
Preset scenarios, parameter sweeps and their artifacts
"""

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Union

import numpy as np

from ..bounds.schedule import BoundSchedule, bounded_liquidations, bounded_price, build_bound_schedule
from ..core.exceptions import ParseError, UnknownCaseStudy
from ..core.model import AssetSpec, BankBook, Regulation, Trajectory, leverage_regulation
from ..core.scenario import Scenario
from ..demand.curves import DemandCurve, ExponentialDecay, ExponentialImpact, NoImpact
from ..simulator.integrator import IntegratorConfig, simulate
from ..stochastic.distributions import StressDistribution
from ..stochastic.stress_test import cdf_table, monte_carlo, price_response, price_cdf_lower_bound
from ..utils.csv_output_formatter import (
    CSVOutputFormatter,
    HITTING_TIMES_FILE,
    SUMMARY_FILE,
    TRAJECTORY_FILE,
)
from . import scenario_io

logger = logging.getLogger(__name__)

STRESS_RATE = -math.log(0.95)
TWENTY_BANK_CAP = 40.0
HIGH_IMPACT = 1.0 / (TWENTY_BANK_CAP + 1e-8)
EXP_STRESS_MU = math.log(20.0) / (math.log(20.0) - math.log(19.0))
LEVERAGE_IMPACT = -math.log(0.9) / (1.0 - 1.0 / math.log(0.9))
TWO_ASSET_IMPACT = 0.495


# ---------------------------------------------------------------------------
# Scenario builders
# ---------------------------------------------------------------------------

def _exp_curve(rate: float, b: float, horizon: float) -> DemandCurve:
    impact = ExponentialImpact(b) if b > 0 else NoImpact()
    return DemandCurve(time_part=ExponentialDecay(rate=rate, freeze_at=horizon), impact_part=impact)


def twenty_bank_scenario(b: float, horizon: float = 1.0, rate: float = STRESS_RATE) -> Scenario:
    """
    Twenty banks on one asset, differing only in liquid holdings

    Bank i holds x_i = 2(i - 1)/475 cash, 2 units of the asset and owes 1;
    the first bank starts exactly at the regulatory threshold.
    """
    banks = tuple(BankBook(x=2.0 * i / 475.0, s=(2.0,), p_bar=1.0, name=f"firm {i + 1}") for i in range(20))
    asset = AssetSpec(alpha=5.0, market_cap=TWENTY_BANK_CAP, demand=_exp_curve(rate, b, horizon))
    return Scenario(regulation=Regulation(theta_min=0.1), banks=banks, assets=(asset,),
                    horizon=horizon, name=f"ex-20bank-b{b:.6g}")


def leverage_scenario(lambda_max: float, horizon: float = 1.0) -> Scenario:
    """One bank starting at its leverage limit with a single unit of capital"""
    reg = leverage_regulation(lambda_max)
    bank = BankBook(x=0.0, s=(lambda_max,), ell=0.0, p_bar=lambda_max - 1.0, alpha_ell=1.0)
    asset = AssetSpec(alpha=1.0, market_cap=lambda_max, demand=_exp_curve(STRESS_RATE, LEVERAGE_IMPACT, horizon))
    return Scenario(regulation=reg, banks=(bank,), assets=(asset,), horizon=horizon,
                    name=f"ex-leverage-{lambda_max:.6g}")


def two_asset_scenario(zeta: float, horizon: float = 1.0) -> Scenario:
    """
    Two banks and two assets with portfolio overlap zeta in [0, 2]

    Only the first asset is stressed exogenously.
    """
    if not 0.0 <= zeta <= 2.0:
        raise ParseError(f"Diversification parameter must lie in [0, 2], got {zeta}", field="zeta")
    cap = 2.0
    banks = (
        BankBook(x=0.0, s=((1.0 - zeta / 2.0) * cap, zeta / 2.0 * cap), p_bar=0.98, name="bank 1"),
        BankBook(x=0.0, s=(zeta / 2.0 * cap, (1.0 - zeta / 2.0) * cap), p_bar=0.98, name="bank 2"),
    )
    assets = (
        AssetSpec(alpha=5.0, market_cap=cap, demand=_exp_curve(STRESS_RATE, TWO_ASSET_IMPACT, horizon)),
        AssetSpec(alpha=5.0, market_cap=cap, demand=_exp_curve(0.0, TWO_ASSET_IMPACT, horizon)),
    )
    return Scenario(regulation=Regulation(theta_min=0.1), banks=banks, assets=assets, horizon=horizon,
                    name=f"ex-2asset-{zeta:.6g}")


# ---------------------------------------------------------------------------
# Results
# ---------------------------------------------------------------------------

@dataclass
class CaseRun:
    """One simulated scenario with its bound schedule"""

    scenario: Scenario
    trajectory: Trajectory
    schedule: Optional[BoundSchedule] = None


@dataclass
class CaseStudyResult:
    """Everything a case study produces"""

    name: str
    runs: Dict[str, CaseRun] = field(default_factory=dict)
    tables: Dict[str, List[Dict[str, Any]]] = field(default_factory=dict)
    summary: Dict[str, Any] = field(default_factory=dict)

    def write(self, out_dir: Union[str, Path], float_format: str = ".17g") -> List[Path]:
        """
        Write every artifact under out_dir

        Each run gets its own folder with scenario.json, trajectory.csv and
        hitting_times.csv; sweep tables and summary.json go to out_dir.
        """
        out = Path(out_dir)
        written = []
        for label, run in self.runs.items():
            folder = out / label
            written.append(scenario_io.save(run.scenario, folder / "scenario.json"))
            written.append(CSVOutputFormatter.write_trajectory(run.trajectory, run.scenario,
                                                               folder / TRAJECTORY_FILE, float_format))
            bounds = run.schedule.hitting_times() if run.schedule is not None else None
            written.append(CSVOutputFormatter.write_hitting_times(folder / HITTING_TIMES_FILE,
                                                                  run.scenario.n_banks,
                                                                  run.trajectory.hitting_times,
                                                                  bounds, float_format))
        for filename, rows in self.tables.items():
            if filename == "cdf.csv":
                written.append(CSVOutputFormatter.write_cdf(out / filename, rows, float_format))
            else:
                written.append(CSVOutputFormatter.write_dicts(out / filename, rows, float_format=float_format))
        written.append(CSVOutputFormatter.write_summary(out / SUMMARY_FILE, {"case_study": self.name, **self.summary}))
        logger.info(f"Wrote {len(written)} artifacts for {self.name} to {out}")
        return written


def _config(engine_config: Optional[Dict[str, Any]], horizon: float) -> IntegratorConfig:
    return IntegratorConfig.from_engine_config(engine_config or {}, horizon)


def _run(scenario: Scenario, engine_config: Optional[Dict[str, Any]], bounds: bool = True) -> CaseRun:
    trajectory = simulate(scenario, _config(engine_config, scenario.horizon))
    root_tol = (engine_config or {}).get("bounds", {}).get("root_tol", 1e-12)
    schedule = build_bound_schedule(scenario, root_tol=root_tol) if bounds else None
    return CaseRun(scenario=scenario, trajectory=trajectory, schedule=schedule)


def _label(prefix: str, value: float) -> str:
    return f"{prefix}_{value:.6g}"


# ---------------------------------------------------------------------------
# Case studies
# ---------------------------------------------------------------------------

def run_twenty_bank(b_values: Sequence[float] = (0.0, 0.7 / TWENTY_BANK_CAP, HIGH_IMPACT),
                    b_grid: Optional[Sequence[float]] = None,
                    engine_config: Optional[Dict[str, Any]] = None) -> CaseStudyResult:
    """
    Hitting times of the twenty-bank system for several impact levels

    Each b in b_values gets full artifacts; b_grid adds an impact sweep of
    terminal price, activated fraction and bound price.
    """
    result = CaseStudyResult(name="ex-20bank")
    hitting: Dict[str, Dict[str, Any]] = {}
    for b in b_values:
        label = _label("b", b)
        run = _run(twenty_bank_scenario(b), engine_config)
        result.runs[label] = run
        bound_times = run.schedule.hitting_times()
        hitting[label] = {
            "b": b,
            "activated": sorted(i + 1 for i in run.trajectory.hitting_times),
            "terminal_price": float(run.trajectory.terminal.q[0]),
            "bound_price": bounded_price(run.schedule, run.scenario.horizon),
            "max_bound_gap": _max_gap(run.trajectory.hitting_times, bound_times),
        }
    result.summary["runs"] = hitting

    if b_grid is None:
        b_grid = np.linspace(0.0, HIGH_IMPACT, 21)
    sweep = []
    for b in b_grid:
        run = _run(twenty_bank_scenario(float(b)), engine_config)
        terminal = run.trajectory.terminal
        sweep.append({
            "b": float(b),
            "terminal_price": float(terminal.q[0]),
            "activated_fraction": len(run.trajectory.hitting_times) / run.scenario.n_banks,
            "bound_price": bounded_price(run.schedule, run.scenario.horizon),
        })
    result.tables["impact_sweep.csv"] = sweep
    return result


def _max_gap(simulated: Dict[int, float], bounds: np.ndarray) -> float:
    """Largest lead of a bound hitting time over the simulated one"""
    gaps = [simulated[i] - bounds[i] for i in simulated if math.isfinite(bounds[i])]
    return max(gaps) if gaps else 0.0


def run_probability(n_samples: int = 10_000, seed: int = 20240101, b: float = 0.9 / TWENTY_BANK_CAP,
                    mu: float = EXP_STRESS_MU, q_grid: Optional[Sequence[float]] = None,
                    workers: int = 1, engine_config: Optional[Dict[str, Any]] = None) -> CaseStudyResult:
    """
    Random exponential stress on the twenty-bank system

    Compares the Monte Carlo price distribution at t = 1 with the analytic
    lower bound, and traces terminal price against the stress level.
    """
    result = CaseStudyResult(name="ex-probability")
    scenario = twenty_bank_scenario(b)
    run = _run(scenario, engine_config)
    result.runs[_label("b", b)] = run
    schedule = run.schedule
    stress = StressDistribution.exponential_rate(mu)
    t = scenario.horizon

    dkw_level = (engine_config or {}).get("monte_carlo", {}).get("dkw_level", 0.99)
    mc = monte_carlo(scenario, stress, t, n_samples, seed, workers=workers, dkw_level=dkw_level,
                     engine_config=engine_config)
    if q_grid is None:
        q_grid = np.round(np.linspace(0.7, 1.0, 61), 10)
    result.tables["cdf.csv"] = cdf_table(mc, q_grid, scenario, schedule, stress)

    levels = np.round(np.linspace(0.5, 1.0, 51), 10)
    exact = price_response(scenario, levels, engine_config)[:, 0]
    response = []
    for v, q in zip(levels, exact):
        stressed = scenario.with_time_decays([ExponentialDecay(rate=-math.log(v) / t, freeze_at=t)])
        response.append({
            "ft_level": float(v),
            "price": float(q),
            "no_impact_price": float(v),
            "bound_price": bounded_price(build_bound_schedule(stressed), t),
        })
    result.tables["stress_response.csv"] = response

    result.summary.update({
        "mu": mu,
        "n_samples": n_samples,
        "seed": seed,
        "dkw_radius": mc.radius,
        "empirical_p_le_0.9": mc.cdf(0.9),
        "empirical_p_le_0.8": mc.cdf(0.8),
        "bound_p_le_0.9": 1.0 - price_cdf_lower_bound(scenario, schedule, t, 0.9, stress),
        "bound_p_le_0.8": 1.0 - price_cdf_lower_bound(scenario, schedule, t, 0.8, stress),
        "no_impact_p_le_0.9": mc.stress_cdf(0.9),
        "calibration_p_ge_stress": stress.prob_at_least(STRESS_RATE),
    })
    return result


def run_leverage(lambda_grid: Optional[Sequence[float]] = None,
                 engine_config: Optional[Dict[str, Any]] = None) -> CaseStudyResult:
    """
    Single bank under a leverage requirement

    Sweeps lambda_max and reports terminal liquidation fraction, holdings
    and price, with the bound counterparts.
    """
    result = CaseStudyResult(name="ex-leverage")
    if lambda_grid is None:
        lambda_grid = np.round(np.arange(1.05, 10.45 + 1e-9, 0.05), 10)
    rows = []
    for lam in lambda_grid:
        run = _run(leverage_scenario(float(lam)), engine_config)
        terminal = run.trajectory.terminal
        horizon = run.scenario.horizon
        _, bound_pi = bounded_liquidations(run.schedule, horizon)
        pi = float(terminal.pi[0])
        rows.append({
            "lambda_max": float(lam),
            "fraction_liquidated": pi,
            "terminal_holdings": float(lam) * (1.0 - pi),
            "terminal_price": float(terminal.q[0]),
            "bound_fraction": float(bound_pi[0]),
            "bound_price": bounded_price(run.schedule, horizon),
        })
    result.tables["leverage_sweep.csv"] = rows
    best = max(rows, key=lambda r: r["terminal_holdings"])
    result.summary.update({
        "peak_fraction_liquidated": max(r["fraction_liquidated"] for r in rows),
        "lambda_max_at_peak_holdings": best["lambda_max"],
    })
    return result


def run_two_asset(zeta_grid: Optional[Sequence[float]] = None,
                  engine_config: Optional[Dict[str, Any]] = None) -> CaseStudyResult:
    """
    Diversification sweep of the two-bank, two-asset system

    Reports terminal prices, market capitalization, liquidation fractions and
    first liquidation times per zeta, plus the aggregated single bank.
    """
    result = CaseStudyResult(name="ex-2asset")
    if zeta_grid is None:
        zeta_grid = np.round(np.arange(0.0, 1.0 + 1e-9, 0.01), 10)
    rows = []
    for zeta in zeta_grid:
        scenario = two_asset_scenario(float(zeta))
        traj = simulate(scenario, _config(engine_config, scenario.horizon))
        rows.append(_two_asset_row(float(zeta), scenario, traj))
    result.tables["diversification_sweep.csv"] = rows

    aggregate = two_asset_scenario(1.0).aggregate()
    agg_run = _run(aggregate, engine_config, bounds=False)
    result.runs["aggregate"] = agg_run
    best = max(rows, key=lambda r: r["market_cap"])
    result.summary.update({
        "zeta_at_max_market_cap": best["zeta"],
        "aggregate_prices": agg_run.trajectory.terminal.q.tolist(),
        "aggregate_market_cap": float(np.dot([a.market_cap for a in aggregate.assets],
                                             agg_run.trajectory.terminal.q)),
    })
    return result


def _two_asset_row(zeta: float, scenario: Scenario, traj: Trajectory) -> Dict[str, Any]:
    terminal = traj.terminal
    caps = np.array([a.market_cap for a in scenario.assets])
    row: Dict[str, Any] = {
        "zeta": zeta,
        "q_1": float(terminal.q[0]),
        "q_2": float(terminal.q[1]),
        "market_cap": float(caps @ terminal.q),
    }
    for i in range(scenario.n_banks):
        row[f"pi_{i + 1}"] = float(terminal.pi[i])
        row[f"tau_{i + 1}"] = traj.hitting_times.get(i, math.inf)
    return row


CASE_STUDIES: Dict[str, Callable[..., CaseStudyResult]] = {
    "ex-20bank": run_twenty_bank,
    "ex-probability": run_probability,
    "ex-leverage": run_leverage,
    "ex-2asset": run_two_asset,
}

KNOBS = {
    "ex-20bank": ("b_values", "b_grid"),
    "ex-probability": ("n_samples", "seed", "b", "mu", "q_grid", "workers"),
    "ex-leverage": ("lambda_grid",),
    "ex-2asset": ("zeta_grid",),
}


def run_case_study(name: str, overrides: Optional[Dict[str, Any]] = None,
                   engine_config: Optional[Dict[str, Any]] = None) -> CaseStudyResult:
    """
    Run a named case study

    Args:
        name: One of ex-20bank, ex-probability, ex-leverage, ex-2asset
        overrides: Knob values (sweep grids, sample count, seed)
        engine_config: Engine configuration dictionary

    Raises:
        UnknownCaseStudy: If the name is not recognized
        ParseError: If an override is not a knob of the case study
    """
    if name not in CASE_STUDIES:
        raise UnknownCaseStudy(f"Unknown case study {name!r}; expected one of {sorted(CASE_STUDIES)}")
    overrides = {k: v for k, v in (overrides or {}).items() if v is not None}
    unknown = set(overrides) - set(KNOBS[name])
    if unknown:
        raise ParseError(f"{name} does not accept {sorted(unknown)}; knobs are {list(KNOBS[name])}",
                         field=sorted(unknown)[0])
    logger.info(f"Running case study {name}")
    return CASE_STUDIES[name](engine_config=engine_config, **overrides)

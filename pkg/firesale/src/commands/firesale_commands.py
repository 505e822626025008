"""
Fire-Sale Engine - Command Handlers
Validate, simulate, bound and stress-test scenarios and write their artifacts
"""

import copy
import logging
import math
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np

from ..bounds.schedule import bounded_price, build_bound_schedule
from ..config.engine_config import get_engine_config
from ..core.exceptions import (
    FireSaleError,
    InadmissibleScenario,
    NotExponentialImpact,
    NumericalError,
    OutputError,
    ParseError,
    ScenarioError,
)
from ..core.scenario import Scenario
from ..scenarios import scenario_io
from ..scenarios.case_studies import run_case_study
from ..scenarios.scenario_validator import ScenarioValidator
from ..simulator.integrator import IntegratorConfig, simulate
from ..stochastic.distributions import StressDistribution, StressTarget
from ..stochastic.stress_test import cdf_table, monte_carlo, price_cdf_lower_bound, random_ft_bound, stress_threshold
from ..utils.csv_output_formatter import (
    BOUND_SCHEDULE_FILE,
    BOUNDS_FILE,
    CDF_FILE,
    HITTING_TIMES_FILE,
    SUMMARY_FILE,
    TRAJECTORY_FILE,
    CSVOutputFormatter,
)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4


def exit_code_for(error: Exception) -> int:
    """CLI exit code of an engine error"""
    if isinstance(error, (ParseError, OutputError)):
        return EXIT_IO
    if isinstance(error, ScenarioError):
        return EXIT_VALIDATION
    if isinstance(error, NumericalError):
        return EXIT_NUMERICAL
    if isinstance(error, (OSError, ValueError)):
        return EXIT_IO
    return EXIT_NUMERICAL


class FireSaleCommands:
    """Command handlers of the fire-sale engine"""

    def __init__(self, project_path: str = ".", config_path: Optional[str] = None):
        self.project_path = project_path
        self.engine_config = get_engine_config(project_root=project_path, config_path=config_path)
        self.config = self.engine_config.get_config()
        self.validator = ScenarioValidator.from_engine_config(self.config)
        self.float_format = self.engine_config.get_float_format()

        # Setup logging
        logging.basicConfig(
            level=self.engine_config.get_log_level(),
            format=self.engine_config.get_log_format()
        )
        self.logger = logging.getLogger("FireSale.Commands")

        # Command registry
        self.commands = {
            "validate": self.validate,
            "simulate": self.simulate,
            "bounds": self.bounds,
            "prob-bound": self.prob_bound,
            "monte-carlo": self.monte_carlo,
            "case-study": self.case_study,
        }

    def execute(self, command: str, args: Dict[str, Any] = None) -> Dict[str, Any]:
        """Execute an engine command"""
        if command not in self.commands:
            return {
                "success": False,
                "error": f"Unknown command: {command}",
                "available_commands": list(self.commands.keys()),
                "exit_code": EXIT_IO,
            }

        try:
            self._check_config()
            result = self.commands[command](args or {})
            return {"success": True, "result": result, "exit_code": EXIT_OK}
        except (FireSaleError, OSError, ValueError) as e:
            self.logger.error(f"Command {command} failed: {e}")
            response: Dict[str, Any] = {
                "success": False,
                "error": str(e),
                "error_type": type(e).__name__,
                "exit_code": exit_code_for(e),
            }
            report = getattr(e, "report", None)
            if report is not None:
                response["report"] = report.to_dict()
            return response

    # -- helpers ---------------------------------------------------------------------

    def _check_config(self):
        issues = self.engine_config.config_issues()
        if issues:
            raise ParseError(f"Invalid engine configuration: {'; '.join(issues)}", field="config")

    def _scenario(self, args: Dict[str, Any]) -> Scenario:
        if "scenario" not in args:
            raise ParseError("Required argument missing", field="scenario")
        scenario = args["scenario"]
        return scenario if isinstance(scenario, Scenario) else scenario_io.load(scenario)

    def _validated(self, args: Dict[str, Any]) -> Scenario:
        scenario = self._scenario(args)
        self.validator.validate(scenario).raise_if_failed()
        return scenario

    def _integrator(self, scenario: Scenario, args: Dict[str, Any]) -> IntegratorConfig:
        return IntegratorConfig.from_engine_config(self.config, scenario.horizon, base_step=args.get("step"),
                                                   output_grid=args.get("grid"), constraint_tol=args.get("tol"))

    def _out(self, args: Dict[str, Any]) -> Optional[Path]:
        return Path(args["out"]) if args.get("out") else None

    def _stress(self, args: Dict[str, Any]) -> StressDistribution:
        if args.get("stress"):
            return StressDistribution.from_dict(args["stress"])
        if args.get("mu") is not None:
            return StressDistribution.exponential_rate(float(args["mu"]))
        raise ParseError("A stress law is required (mu or stress)", field="stress")

    def _q_grid(self, args: Dict[str, Any]) -> List[float]:
        grid = args.get("q_star")
        if grid is None:
            return [float(q) for q in np.round(np.linspace(0.7, 1.0, 61), 10)]
        return [float(grid)] if isinstance(grid, (int, float)) else [float(q) for q in grid]

    # -- commands --------------------------------------------------------------------

    def validate(self, args: Dict[str, Any]) -> Dict[str, Any]:
        """
        Validate a scenario file
        Args:
            scenario: Path to the scenario file (or a Scenario)
        """
        scenario = self._scenario(args)
        report = self.validator.validate(scenario)
        if not report.passed:
            raise InadmissibleScenario("; ".join(report.issues()), report=report)
        return report.to_dict()

    def simulate(self, args: Dict[str, Any]) -> Dict[str, Any]:
        """
        Simulate a scenario on [0, T]
        Args:
            scenario: Scenario file
            out: Output directory (optional)
            step, grid, tol: Integrator overrides
        """
        scenario = self._validated(args)
        traj = simulate(scenario, self._integrator(scenario, args))
        schedule = build_bound_schedule(scenario, root_tol=self.engine_config.get_root_tol())
        bound_times = schedule.hitting_times()

        summary = {
            "scenario": scenario.name,
            "horizon": scenario.horizon,
            "terminal_prices": traj.terminal.q.tolist(),
            "terminal_fractions": traj.terminal.pi.tolist(),
            "hitting_times": {str(i + 1): tau for i, tau in sorted(traj.hitting_times.items())},
            "samples": len(traj.samples),
        }
        out = self._out(args)
        if out is not None:
            CSVOutputFormatter.write_trajectory(traj, scenario, out / TRAJECTORY_FILE, self.float_format)
            CSVOutputFormatter.write_hitting_times(out / HITTING_TIMES_FILE, scenario.n_banks,
                                                   traj.hitting_times, bound_times, self.float_format)
            CSVOutputFormatter.write_summary(out / SUMMARY_FILE, summary)
            summary["out"] = str(out)
        return summary

    def bounds(self, args: Dict[str, Any]) -> Dict[str, Any]:
        """
        Build the worst-case bound schedule
        Args:
            scenario: Scenario file
            method: auto, closed or generic
            out: Output directory (optional)
            grid: Number of output times
        """
        scenario = self._validated(args)
        schedule = build_bound_schedule(scenario, method=args.get("method") or "auto",
                                        root_tol=self.engine_config.get_root_tol())
        grid = int(args.get("grid") or self.config["integrator"]["output_grid"])
        times = np.linspace(0.0, scenario.horizon, grid)

        summary = {
            "scenario": scenario.name,
            "method": "closed" if all(l.closed_form for l in schedule.ladders) else "generic",
            "bound_hitting_times": {str(i + 1): t for i, t in enumerate(schedule.hitting_times())
                                    if math.isfinite(t)},
            "terminal_bound_prices": [bounded_price(schedule, scenario.horizon, k)
                                      for k in range(scenario.n_assets)],
        }
        out = self._out(args)
        if out is not None:
            CSVOutputFormatter.write_bounds(schedule, times, out / BOUNDS_FILE, self.float_format)
            CSVOutputFormatter.write_bound_schedule(schedule, out / BOUND_SCHEDULE_FILE, self.float_format)
            CSVOutputFormatter.write_summary(out / SUMMARY_FILE, summary)
            summary["out"] = str(out)
        return summary

    def prob_bound(self, args: Dict[str, Any]) -> Dict[str, Any]:
        """
        Analytic lower bound on P(q(t) >= q*)
        Args:
            scenario: Scenario file (exponential curves)
            t: Evaluation time (defaults to T)
            q_star: Price level or list of levels
            mu / stress: Stress law
        """
        scenario = self._validated(args)
        schedule = build_bound_schedule(scenario, method="closed")
        stress = self._stress(args)
        t = float(args.get("t", scenario.horizon))
        bound = random_ft_bound if stress.applies_to is StressTarget.FT_VALUE else price_cdf_lower_bound
        rows = []
        for q_star in self._q_grid(args):
            p_ge = bound(scenario, schedule, t, q_star, stress)
            row = {"q_star": q_star, "analytic_bound_p_ge": p_ge, "analytic_bound_p": 1.0 - p_ge}
            for k in range(scenario.n_assets):
                row[f"ft_threshold_{k + 1}"] = stress_threshold(schedule, k, q_star)[1]
            rows.append(row)
        out = self._out(args)
        summary = {"scenario": scenario.name, "t": t, "stress": stress.to_dict(), "bounds": rows}
        if out is not None:
            CSVOutputFormatter.write_dicts(out / "prob_bound.csv", rows, float_format=self.float_format)
            CSVOutputFormatter.write_summary(out / SUMMARY_FILE, summary)
            summary["out"] = str(out)
        return summary

    def monte_carlo(self, args: Dict[str, Any]) -> Dict[str, Any]:
        """
        Monte Carlo price distribution against the analytic bound
        Args:
            scenario: Scenario file
            t: Evaluation time (defaults to T)
            n_samples: Number of draws
            seed: Seed (defaults to the configured one)
            workers: Parallel processes
            mu / stress: Stress law
        """
        scenario = self._validated(args)
        stress = self._stress(args)
        t = float(args.get("t", scenario.horizon))
        seed = int(args["seed"]) if args.get("seed") is not None else self.engine_config.get_seed()
        n_samples = int(args.get("n_samples", 10_000))
        result = monte_carlo(scenario, stress, t, n_samples, seed,
                             workers=int(args.get("workers") or self.engine_config.get_workers()),
                             dkw_level=self.engine_config.get_dkw_level(), engine_config=self.config)
        schedule = None
        if scenario.n_assets == 1 and stress.applies_to is StressTarget.RATE:
            try:
                schedule = build_bound_schedule(scenario, method="closed")
            except NotExponentialImpact:
                self.logger.info("No closed-form bound for this scenario; cdf.csv carries empirical columns only")
        rows = cdf_table(result, self._q_grid(args), scenario, schedule, stress)
        summary = {
            "scenario": scenario.name,
            "t": t,
            "seed": seed,
            "n_samples": n_samples,
            "dkw_level": result.dkw_level,
            "dkw_radius": result.radius,
            "path": result.metadata.get("path"),
        }
        out = self._out(args)
        if out is not None:
            CSVOutputFormatter.write_cdf(out / CDF_FILE, rows, self.float_format)
            CSVOutputFormatter.write_summary(out / SUMMARY_FILE, summary)
            summary["out"] = str(out)
        summary["cdf"] = rows
        return summary

    def case_study(self, args: Dict[str, Any]) -> Dict[str, Any]:
        """
        Run a preset case study
        Args:
            name: ex-20bank, ex-probability, ex-leverage or ex-2asset
            overrides: Knob values
            out: Output directory (optional)
            step, grid, tol: Integrator overrides (every preset has T = 1)
        """
        if "name" not in args:
            raise ParseError("Required argument missing", field="name")
        if args.get("scenario"):
            raise ParseError("Case studies build their own scenarios; a scenario file is not accepted",
                             field="scenario")
        config = copy.deepcopy(self.config)
        integrator = config.setdefault("integrator", {})
        for arg, key in (("step", "base_step_fraction"), ("grid", "output_grid"), ("tol", "constraint_tol")):
            if args.get(arg) is not None:
                integrator[key] = args[arg]
        result = run_case_study(args["name"], args.get("overrides"), config)
        out = self._out(args)
        written = result.write(out, self.float_format) if out is not None else []
        return {"case_study": result.name, "summary": result.summary,
                "artifacts": [str(p) for p in written]}

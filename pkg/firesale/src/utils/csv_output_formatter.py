"""
Fire-Sale CSV Output Formatter
Plot-ready CSV artifacts and JSON summaries with round-trip float formatting
"""

import csv
import json
import logging
import math
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from ..bounds.schedule import BoundSchedule, bounded_liquidations
from ..core.exceptions import IoError
from ..core.model import Trajectory
from ..core.scenario import Scenario

logger = logging.getLogger(__name__)

NEVER = "never"
FLOAT_FORMAT = ".17g"

TRAJECTORY_FILE = "trajectory.csv"
HITTING_TIMES_FILE = "hitting_times.csv"
CDF_FILE = "cdf.csv"
BOUNDS_FILE = "bounds.csv"
BOUND_SCHEDULE_FILE = "bound_schedule.csv"
SUMMARY_FILE = "summary.json"

BOUND_SCHEDULE_COLUMNS = ["asset", "rank", "bank", "q_bar", "tau_bound", "lambda", "nu"]
CDF_COLUMNS = ["q_star", "empirical_p", "analytic_bound_p", "dkw_lo", "dkw_hi",
               "empirical_p_ge", "analytic_bound_p_ge"]

PathLike = Union[str, Path]


class CSVOutputFormatter:
    """Writes engine results as CSV files with documented column layouts"""

    @staticmethod
    def format_value(value: Any, float_format: str = FLOAT_FORMAT) -> str:
        """17 significant digits for floats; inf and nan spelled out"""
        if isinstance(value, (bool, np.bool_)):
            return "1" if value else "0"
        if isinstance(value, (int, np.integer)):
            return str(int(value))
        if isinstance(value, (float, np.floating)):
            value = float(value)
            if math.isnan(value):
                return "nan"
            if math.isinf(value):
                return "inf" if value > 0 else "-inf"
            return format(value, float_format)
        return str(value)

    @staticmethod
    def write_rows(path: PathLike, header: Sequence[str], rows: Iterable[Sequence[Any]],
                   float_format: str = FLOAT_FORMAT) -> Path:
        """
        Write a CSV file

        Raises:
            IoError: If the file cannot be written
        """
        path = Path(path)
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            with open(path, 'w', newline='', encoding='utf-8') as f:
                writer = csv.writer(f)
                writer.writerow(header)
                count = 0
                for row in rows:
                    writer.writerow([CSVOutputFormatter.format_value(v, float_format) for v in row])
                    count += 1
        except OSError as e:
            logger.error(f"Failed to write {path}: {e}")
            raise IoError(f"Cannot write {path}: {e}")
        logger.debug(f"Wrote {count} rows to {path}")
        return path

    @staticmethod
    def write_dicts(path: PathLike, rows: Sequence[Mapping[str, Any]],
                    columns: Optional[Sequence[str]] = None, float_format: str = FLOAT_FORMAT) -> Path:
        """Write rows given as dictionaries; columns default to the first row's keys"""
        if columns is None:
            columns = list(rows[0].keys()) if rows else []
        return CSVOutputFormatter.write_rows(path, columns, ([r.get(c) for c in columns] for r in rows), float_format)

    # -- trajectory ------------------------------------------------------------------

    @staticmethod
    def trajectory_header(n_banks: int, n_assets: int) -> List[str]:
        header = ["t"] + [f"q_{k + 1}" for k in range(n_assets)]
        for i in range(n_banks):
            header += [f"pi_{i + 1}", f"psi_{i + 1}", f"theta_{i + 1}", f"active_{i + 1}"]
        return header

    @staticmethod
    def write_trajectory(trajectory: Trajectory, scenario: Scenario, path: PathLike,
                         float_format: str = FLOAT_FORMAT) -> Path:
        """
        trajectory.csv: t, q_1..q_m, then per bank pi_i, psi_i, theta_i, active_i

        One row per recorded sample (output grid, extra sample times and
        activation events), in time order.
        """
        header = CSVOutputFormatter.trajectory_header(scenario.n_banks, scenario.n_assets)

        def rows():
            for state in trajectory.samples:
                theta = scenario.capital_ratios(state.pi, state.q, state.psi)
                row: List[Any] = [state.t, *state.q]
                for i in range(scenario.n_banks):
                    row += [state.pi[i], state.psi[i], theta[i], i in state.active]
                yield row

        return CSVOutputFormatter.write_rows(path, header, rows(), float_format)

    # -- hitting times ---------------------------------------------------------------

    @staticmethod
    def write_hitting_times(path: PathLike, n_banks: int, simulated: Mapping[int, float],
                            bounds: Optional[Sequence[float]] = None,
                            float_format: str = FLOAT_FORMAT) -> Path:
        """
        hitting_times.csv: bank (1-based), tau, tau_bound

        Banks that never activate (or whose bound is never reached) carry the
        'never' sentinel.
        """
        def cell(value: Optional[float]) -> Any:
            if value is None or (isinstance(value, float) and (math.isinf(value) or math.isnan(value))):
                return NEVER
            return value

        rows = []
        for i in range(n_banks):
            bound = bounds[i] if bounds is not None else None
            rows.append([i + 1, cell(simulated.get(i)), cell(bound)])
        return CSVOutputFormatter.write_rows(path, ["bank", "tau", "tau_bound"], rows, float_format)

    # -- bound schedule --------------------------------------------------------------

    @staticmethod
    def bound_rows(schedule: BoundSchedule, times: Sequence[float]) -> Tuple[List[str], List[List[float]]]:
        """Header and rows of t, bounded prices q_bound_k, bounded fractions pi_bound_i"""
        scenario = schedule.scenario
        header = (["t"] + [f"q_bound_{k + 1}" for k in range(scenario.n_assets)]
                  + [f"pi_bound_{i + 1}" for i in range(scenario.n_banks)])
        rows = []
        for t in times:
            gamma, pi = bounded_liquidations(schedule, float(t))
            prices = [scenario.assets[k].demand.price(float(t), float(gamma[:, k].sum()))
                      for k in range(scenario.n_assets)]
            rows.append([float(t), *prices, *pi])
        return header, rows

    @staticmethod
    def write_bounds(schedule: BoundSchedule, times: Sequence[float], path: PathLike,
                     float_format: str = FLOAT_FORMAT) -> Path:
        header, rows = CSVOutputFormatter.bound_rows(schedule, times)
        return CSVOutputFormatter.write_rows(path, header, rows, float_format)

    @staticmethod
    def write_bound_schedule(schedule: BoundSchedule, path: PathLike, float_format: str = FLOAT_FORMAT) -> Path:
        """
        bound_schedule.csv: one row per (asset, rank) of the activation ladders

        Asset, rank and bank are 1-based; banks that are never reached carry
        tau_bound = inf.
        """
        rows = []
        for ladder in schedule.ladders:
            for rank, bank in enumerate(ladder.banks):
                rows.append({"asset": ladder.asset + 1, "rank": rank + 1, "bank": bank + 1,
                             "q_bar": ladder.thresholds[rank], "tau_bound": ladder.tau[rank],
                             "lambda": ladder.lam[rank], "nu": ladder.nu[rank]})
        return CSVOutputFormatter.write_dicts(path, rows, BOUND_SCHEDULE_COLUMNS, float_format)

    # -- distribution ----------------------------------------------------------------

    @staticmethod
    def write_cdf(path: PathLike, rows: Sequence[Mapping[str, float]], float_format: str = FLOAT_FORMAT) -> Path:
        """cdf.csv sorted by q_star"""
        ordered = sorted(rows, key=lambda r: r["q_star"])
        return CSVOutputFormatter.write_dicts(path, ordered, CDF_COLUMNS, float_format)

    # -- summary ---------------------------------------------------------------------

    @staticmethod
    def format_summary(data: Dict[str, Any]) -> str:
        """Command summary as JSON"""
        return json.dumps(data, indent=2, default=_json_default)

    @staticmethod
    def write_summary(path: PathLike, data: Dict[str, Any]) -> Path:
        path = Path(path)
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(CSVOutputFormatter.format_summary(data) + "\n", encoding='utf-8')
        except OSError as e:
            logger.error(f"Failed to write {path}: {e}")
            raise IoError(f"Cannot write {path}: {e}")
        return path


def _json_default(value: Any) -> Any:
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    return str(value)

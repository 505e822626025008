"""
Fire-Sale Engine - Command Line
argparse front end over the command registry; exit codes follow the error family
"""

import argparse
import json
import logging
import sys
from typing import Any, Dict, List, Optional

from ..core.exceptions import ParseError
from .firesale_commands import FireSaleCommands, exit_code_for


class CommandLineParser(argparse.ArgumentParser):
    """Argument parser that raises ParseError on bad input instead of exiting"""

    def error(self, message: str):
        raise ParseError(f"{self.prog}: {message}")


def _floats(text: str) -> List[float]:
    """Comma-separated list of numbers"""
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"Expected comma-separated numbers, got {text!r}")


def _common(parser: argparse.ArgumentParser, scenario: bool = True):
    if scenario:
        parser.add_argument("--scenario", help="Scenario file (JSON)")
    parser.add_argument("--out", help="Output directory for CSV artifacts")
    parser.add_argument("--seed", type=int, help="Random seed (unsigned 64-bit)")
    parser.add_argument("--step", type=float, help="Integrator base step")
    parser.add_argument("--grid", type=int, help="Number of output grid points")
    parser.add_argument("--tol", type=float, help="Constraint tolerance")
    parser.add_argument("--config", help="Engine configuration file (JSON or YAML)")
    parser.add_argument("-v", "--verbose", action="store_true", help="Debug logging")


def _stress(parser: argparse.ArgumentParser):
    parser.add_argument("--mu", type=float, help="Rate of an exponentially distributed stress rate a")
    parser.add_argument("--stress", type=json.loads, help="Stress law as JSON, e.g. "
                        "'{\"kind\": \"uniform\", \"applies_to\": \"ft_value\", \"params\": [0.9, 1.0]}'")
    parser.add_argument("-t", "--time", type=float, dest="t", help="Evaluation time (defaults to the horizon)")
    parser.add_argument("--q-star", type=_floats, dest="q_star", help="Price levels q*")


def build_parser() -> argparse.ArgumentParser:
    parser = CommandLineParser(prog="firesale", description="Fire-sale contagion engine")
    verbs = parser.add_subparsers(dest="command", required=True)

    _common(verbs.add_parser("validate", help="Check a scenario file"))
    _common(verbs.add_parser("simulate", help="Simulate liquidations and prices on [0, T]"))

    bounds = verbs.add_parser("bounds", help="Worst-case bound schedule")
    _common(bounds)
    bounds.add_argument("--method", choices=["auto", "closed", "generic"], default="auto")

    prob = verbs.add_parser("prob-bound", help="Analytic lower bound on the price distribution")
    _common(prob)
    _stress(prob)

    mc = verbs.add_parser("monte-carlo", help="Monte Carlo price distribution")
    _common(mc)
    _stress(mc)
    mc.add_argument("--samples", type=int, default=10_000, dest="n_samples", help="Number of draws")
    mc.add_argument("--workers", type=int, help="Parallel processes")

    case = verbs.add_parser("case-study", help="Run a preset case study (builds its own scenarios)")
    _common(case, scenario=False)
    case.add_argument("--name", required=True, help="ex-20bank, ex-probability, ex-leverage or ex-2asset")
    case.add_argument("--b-values", type=_floats, help="Impact levels with full artifacts (ex-20bank)")
    case.add_argument("--b-grid", type=_floats, help="Impact sweep grid (ex-20bank)")
    case.add_argument("--lambda-grid", type=_floats, help="Leverage grid (ex-leverage)")
    case.add_argument("--zeta-grid", type=_floats, help="Diversification grid (ex-2asset)")
    case.add_argument("--samples", type=int, dest="n_samples", help="Monte Carlo draws (ex-probability)")
    case.add_argument("--workers", type=int, help="Parallel processes (ex-probability)")
    return parser


CASE_KNOBS = ("b_values", "b_grid", "lambda_grid", "zeta_grid", "n_samples", "seed", "workers")


def _command_args(args: argparse.Namespace) -> Dict[str, Any]:
    values = {k: v for k, v in vars(args).items() if k not in ("command", "verbose", "config") and v is not None}
    if args.command == "case-study":
        overrides = {k: values.pop(k) for k in CASE_KNOBS if k in values}
        values["overrides"] = overrides
    if values.get("q_star") is not None and len(values["q_star"]) == 1:
        values["q_star"] = values["q_star"][0]
    return values


def main(argv: Optional[List[str]] = None) -> int:
    """CLI entry point"""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except ParseError as e:
        result = {"success": False, "error": str(e), "error_type": type(e).__name__,
                  "exit_code": exit_code_for(e)}
        print(json.dumps(result, indent=2))
        return result["exit_code"]

    commands = FireSaleCommands(config_path=args.config)
    if args.verbose:
        logging.getLogger().setLevel(logging.DEBUG)

    result = commands.execute(args.command, _command_args(args))
    print(json.dumps(result, indent=2, default=str))
    return result["exit_code"]


if __name__ == "__main__":
    sys.exit(main())

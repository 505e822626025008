"""
Scenario Files
Versioned JSON representation of scenarios and its parser
"""

import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Union

from ..core.exceptions import IoError, ParseError
from ..core.model import AssetSpec, BankBook, Regulation
from ..core.scenario import Scenario
from ..demand.curves import DemandCurve

logger = logging.getLogger(__name__)

SCHEMA = "firesale.scenario/1"

BANK_FIELDS = ("x", "s", "ell", "p_bar", "alpha_ell", "name")
ASSET_FIELDS = ("alpha", "market_cap", "demand", "name")


def _require(data: Dict[str, Any], key: str, where: str) -> Any:
    if key not in data:
        raise ParseError("Missing required field", field=f"{where}.{key}" if where else key)
    return data[key]


def _number(value: Any, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ParseError(f"Expected a number, got {value!r}", field=where)
    return float(value)


def _parse_bank(data: Dict[str, Any], index: int) -> BankBook:
    where = f"banks[{index}]"
    if not isinstance(data, dict):
        raise ParseError("Bank entry must be an object", field=where)
    unknown = set(data) - set(BANK_FIELDS)
    if unknown:
        raise ParseError(f"Unknown bank fields {sorted(unknown)}", field=where)
    holdings = _require(data, "s", where)
    if not isinstance(holdings, list):
        raise ParseError("Tradable holdings must be a list", field=f"{where}.s")
    return BankBook(
        x=_number(_require(data, "x", where), f"{where}.x"),
        s=tuple(_number(v, f"{where}.s[{k}]") for k, v in enumerate(holdings)),
        ell=_number(data.get("ell", 0.0), f"{where}.ell"),
        p_bar=_number(data.get("p_bar", 0.0), f"{where}.p_bar"),
        alpha_ell=_number(data.get("alpha_ell", 0.0), f"{where}.alpha_ell"),
        name=data.get("name"),
    )


def _parse_asset(data: Dict[str, Any], index: int, horizon: float) -> AssetSpec:
    where = f"assets[{index}]"
    if not isinstance(data, dict):
        raise ParseError("Asset entry must be an object", field=where)
    unknown = set(data) - set(ASSET_FIELDS)
    if unknown:
        raise ParseError(f"Unknown asset fields {sorted(unknown)}", field=where)
    demand = DemandCurve.from_dict(_require(data, "demand", where), horizon)
    return AssetSpec(
        alpha=_number(_require(data, "alpha", where), f"{where}.alpha"),
        market_cap=_number(_require(data, "market_cap", where), f"{where}.market_cap"),
        demand=demand,
        name=data.get("name"),
    )


def parse_scenario(data: Dict[str, Any]) -> Scenario:
    """
    Build a Scenario from its dictionary representation

    Args:
        data: Decoded scenario document

    Returns:
        Scenario (not yet validated beyond structural checks)

    Raises:
        ParseError: If a field is missing, mistyped or unknown
        InadmissibleScenario: If a book or asset violates a structural invariant
    """
    if not isinstance(data, dict):
        raise ParseError("Scenario document must be a JSON object")
    schema = data.get("schema")
    if schema != SCHEMA:
        raise ParseError(f"Unsupported schema {schema!r}, expected {SCHEMA!r}", field="schema")
    regulation = _require(data, "regulation", "")
    theta_min = _number(_require(regulation, "theta_min", "regulation"), "regulation.theta_min")
    horizon = _number(_require(data, "horizon", ""), "horizon")

    assets = _require(data, "assets", "")
    banks = _require(data, "banks", "")
    if not isinstance(assets, list) or not isinstance(banks, list):
        raise ParseError("assets and banks must be lists", field="assets")

    return Scenario(
        regulation=Regulation(theta_min=theta_min),
        banks=tuple(_parse_bank(b, i) for i, b in enumerate(banks)),
        assets=tuple(_parse_asset(a, k, horizon) for k, a in enumerate(assets)),
        horizon=horizon,
        name=data.get("name"),
    )


def scenario_to_dict(scenario: Scenario) -> Dict[str, Any]:
    """Dictionary representation that parse_scenario reads back field for field"""
    banks: List[Dict[str, Any]] = []
    for bank in scenario.banks:
        entry: Dict[str, Any] = {"x": bank.x, "s": list(bank.s), "ell": bank.ell,
                                 "p_bar": bank.p_bar, "alpha_ell": bank.alpha_ell}
        if bank.name is not None:
            entry["name"] = bank.name
        banks.append(entry)
    assets: List[Dict[str, Any]] = []
    for asset in scenario.assets:
        entry = {"alpha": asset.alpha, "market_cap": asset.market_cap, "demand": asset.demand.to_dict()}
        if asset.name is not None:
            entry["name"] = asset.name
        assets.append(entry)
    data: Dict[str, Any] = {"schema": SCHEMA}
    if scenario.name is not None:
        data["name"] = scenario.name
    data.update({
        "regulation": {"theta_min": scenario.regulation.theta_min},
        "horizon": scenario.horizon,
        "assets": assets,
        "banks": banks,
    })
    return data


def loads(text: str) -> Scenario:
    """Parse a scenario document from a JSON string"""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"Invalid JSON: {e.msg}", line=e.lineno)
    return parse_scenario(data)


def load(path: Union[str, Path]) -> Scenario:
    """
    Read a scenario file

    Raises:
        ParseError: If the file is missing, not UTF-8 JSON or malformed
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as e:
        raise ParseError(f"Cannot read scenario file {path}: {e}")
    scenario = loads(text)
    logger.info(f"Loaded scenario {scenario.name or path.name}: {scenario.n_banks} banks, "
                f"{scenario.n_assets} assets, T={scenario.horizon}")
    return scenario


def dumps(scenario: Scenario) -> str:
    return json.dumps(scenario_to_dict(scenario), indent=2)


def save(scenario: Scenario, path: Union[str, Path]) -> Path:
    """
    Write a scenario file

    Raises:
        IoError: If the path is not writable
    """
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(dumps(scenario) + "\n", encoding="utf-8")
    except OSError as e:
        logger.error(f"Failed to save scenario: {e}")
        raise IoError(f"Cannot write scenario file {path}: {e}")
    logger.debug(f"Saved scenario to {path}")
    return path


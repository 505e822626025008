"""
Scenario Files, Validation and Case Studies
"""

from .scenario_io import SCHEMA, dumps, load, loads, parse_scenario, save, scenario_to_dict
from .scenario_validator import CheckResult, ScenarioValidator, ValidationReport, validate
from .case_studies import (
    CASE_STUDIES,
    CaseStudyResult,
    leverage_scenario,
    run_case_study,
    twenty_bank_scenario,
    two_asset_scenario,
)

__all__ = [
    # Files
    'SCHEMA',
    'dumps',
    'load',
    'loads',
    'parse_scenario',
    'save',
    'scenario_to_dict',

    # Validation
    'CheckResult',
    'ScenarioValidator',
    'ValidationReport',
    'validate',

    # Case studies
    'CASE_STUDIES',
    'CaseStudyResult',
    'leverage_scenario',
    'run_case_study',
    'twenty_bank_scenario',
    'two_asset_scenario',
]

"""
Fire-Sale Engine Core
Balance-sheet model, scenarios and the error hierarchy
"""

from .exceptions import (
    FireSaleError,
    ScenarioError,
    InadmissibleScenario,
    ParseError,
    UnknownCaseStudy,
    ZeroRiskWeightedAssets,
    NoTradableAssets,
    NeverActivates,
    DomainExceeded,
    NotExponentialImpact,
    NumericalError,
    ConstraintDrift,
    NearSingularRegime,
    LinearSolveFailure,
    SingularUpdate,
    MonotonicityViolation,
    DomainError,
    BranchDomainError,
    UnsupportedJoint,
    DrawFailure,
    OutputError,
    IoError,
)
from .model import (
    Regulation,
    BankBook,
    AssetSpec,
    SystemState,
    Trajectory,
    leverage_regulation,
    liability_gap,
    capital_ratio,
    threshold_price,
    activation_margin,
    threshold_order,
)
from .scenario import Scenario

__all__ = [
    # Errors
    'FireSaleError',
    'ScenarioError',
    'InadmissibleScenario',
    'ParseError',
    'UnknownCaseStudy',
    'ZeroRiskWeightedAssets',
    'NoTradableAssets',
    'NeverActivates',
    'DomainExceeded',
    'NotExponentialImpact',
    'NumericalError',
    'ConstraintDrift',
    'NearSingularRegime',
    'LinearSolveFailure',
    'SingularUpdate',
    'MonotonicityViolation',
    'DomainError',
    'BranchDomainError',
    'UnsupportedJoint',
    'DrawFailure',
    'OutputError',
    'IoError',

    # Model
    'Regulation',
    'BankBook',
    'AssetSpec',
    'SystemState',
    'Trajectory',
    'leverage_regulation',
    'liability_gap',
    'capital_ratio',
    'threshold_price',
    'activation_margin',
    'threshold_order',

    # Scenario
    'Scenario',
]

"""
Fire-Sale Engine Exceptions
Single error hierarchy shared by every engine component
"""

from typing import Any, Dict, Optional


class FireSaleError(Exception):
    """Base class for all engine errors"""
    pass


# ---------------------------------------------------------------------------
# Scenario / input errors (CLI exit code 2, parse errors exit code 4)
# ---------------------------------------------------------------------------

class ScenarioError(FireSaleError):
    """Raised when a scenario or one of its parts is not admissible"""
    pass


class InadmissibleScenario(ScenarioError):
    """Raised when a scenario fails validation"""

    def __init__(self, message: str, report: Optional[Any] = None):
        super().__init__(message)
        self.report = report


class ParseError(ScenarioError):
    """Raised when a scenario file cannot be parsed"""

    def __init__(self, message: str, field: Optional[str] = None, line: Optional[int] = None):
        location = []
        if line is not None:
            location.append(f"line {line}")
        if field:
            location.append(f"field '{field}'")
        suffix = f" ({', '.join(location)})" if location else ""
        super().__init__(f"{message}{suffix}")
        self.field = field
        self.line = line


class UnknownCaseStudy(ScenarioError):
    """Raised when a case-study name is not recognized"""
    pass


class ZeroRiskWeightedAssets(ScenarioError):
    """Raised when a bank has no risk-weighted assets"""
    pass


class NoTradableAssets(ScenarioError):
    """Raised when a bank holds no tradable asset with positive weight"""
    pass


class NeverActivates(ScenarioError):
    """Raised when a quantity is requested for a bank that never liquidates"""
    pass


class DomainExceeded(ScenarioError):
    """Raised when an impact curve is evaluated outside its domain"""
    pass


class NotExponentialImpact(ScenarioError):
    """Raised when an operation requires exponential price impact"""
    pass


# ---------------------------------------------------------------------------
# Numerical errors (CLI exit code 3)
# ---------------------------------------------------------------------------

class NumericalError(FireSaleError):
    """Raised when a numerical procedure fails"""

    def __init__(self, message: str, t: Optional[float] = None):
        if t is not None:
            message = f"{message} (t={t:.12g})"
        super().__init__(message)
        self.t = t


class ConstraintDrift(NumericalError):
    """Raised when an active bank leaves the regulatory boundary"""
    pass


class NearSingularRegime(NumericalError):
    """Raised when a regime multiplier Lambda falls below the floor"""
    pass


class LinearSolveFailure(NumericalError):
    """Raised when the regime linear system is numerically singular"""
    pass


class SingularUpdate(NumericalError):
    """Raised when a rank-one update has a vanishing denominator"""
    pass


class MonotonicityViolation(NumericalError):
    """Raised when prices increase or liquidations decrease along a trajectory"""
    pass


class DomainError(NumericalError):
    """Raised when a special function is evaluated outside its domain"""
    pass


class BranchDomainError(DomainError):
    """Raised when a Lambert W argument falls below the branch point"""
    pass


class UnsupportedJoint(NumericalError):
    """Raised when a joint stress law has neither analytic form nor sampler"""
    pass


class DrawFailure(NumericalError):
    """Raised when one Monte Carlo draw fails"""

    def __init__(self, draw_index: int, parameters: Dict[str, Any], cause: Exception):
        super().__init__(f"Draw {draw_index} failed with parameters {parameters}: {cause}")
        self.draw_index = draw_index
        self.parameters = parameters
        self.cause = cause


# ---------------------------------------------------------------------------
# Output errors (CLI exit code 4)
# ---------------------------------------------------------------------------

class OutputError(FireSaleError):
    """Raised when artifacts cannot be written"""
    pass


class IoError(OutputError):
    """Raised when an output path is not writable"""
    pass

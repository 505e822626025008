"""
Inverse Demand Curves
Separable price response F(t, Gamma) = f_t(t) * f_Gamma(Gamma) for tradable assets
"""

import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.optimize import brentq

from ..core.exceptions import DomainExceeded, NotExponentialImpact, ParseError

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]


# ---------------------------------------------------------------------------
# Time decay f_t
# ---------------------------------------------------------------------------

class TimeDecay(ABC):
    """Exogenous price response in time; nonincreasing, C^1, f_t(0) = 1"""

    kind: str = "abstract"

    @abstractmethod
    def value(self, t: float) -> float:
        """Evaluate f_t(t)"""
        pass

    @abstractmethod
    def derivative(self, t: float) -> float:
        """Evaluate f_t'(t)"""
        pass

    @abstractmethod
    def inverse(self, level: float) -> float:
        """
        First time the decay reaches a level

        Args:
            level: Price factor

        Returns:
            inf{t >= 0 : f_t(t) <= level}, or math.inf if never reached
        """
        pass

    @abstractmethod
    def to_dict(self) -> Dict[str, Any]:
        pass

    @staticmethod
    def from_dict(data: Dict[str, Any], horizon: Optional[float] = None) -> "TimeDecay":
        """Build a time decay from its scenario-file representation"""
        kind = data.get("kind")
        if kind == "constant":
            return ConstantDecay()
        if kind == "exponential":
            if "rate" not in data:
                raise ParseError("Exponential time decay needs a rate", field="time_part.rate")
            freeze_at = data.get("freeze_at", horizon)
            return ExponentialDecay(rate=float(data["rate"]),
                                    freeze_at=None if freeze_at is None else float(freeze_at))
        if kind == "tabulated":
            try:
                return TabulatedDecay(times=tuple(float(v) for v in data["times"]),
                                      values=tuple(float(v) for v in data["values"]))
            except KeyError as e:
                raise ParseError("Tabulated time decay needs times and values",
                                 field=f"time_part.{e.args[0]}")
        raise ParseError(f"Unknown time decay kind: {kind!r}", field="time_part.kind")


@dataclass(frozen=True)
class ConstantDecay(TimeDecay):
    """No exogenous stress: f_t == 1"""

    kind = "constant"

    def value(self, t: float) -> float:
        return 1.0

    def derivative(self, t: float) -> float:
        return 0.0

    def inverse(self, level: float) -> float:
        return 0.0 if level >= 1.0 else math.inf

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": "constant"}


@dataclass(frozen=True)
class ExponentialDecay(TimeDecay):
    """
    Exponential decay frozen at the horizon

    f_t(t) = exp(-a * min(t, T)); the derivative vanishes for t > T.
    """

    rate: float
    freeze_at: Optional[float] = None

    kind = "exponential"

    def __post_init__(self):
        if self.rate < 0:
            raise ParseError(f"Exponential decay rate must be nonnegative, got {self.rate}",
                             field="time_part.rate")

    def _clock(self, t: float) -> float:
        if self.freeze_at is not None and t > self.freeze_at:
            return self.freeze_at
        return t

    def value(self, t: float) -> float:
        return math.exp(-self.rate * self._clock(t))

    def derivative(self, t: float) -> float:
        if self.freeze_at is not None and t > self.freeze_at:
            return 0.0
        return -self.rate * math.exp(-self.rate * t)

    def inverse(self, level: float) -> float:
        if level >= 1.0:
            return 0.0
        if level <= 0.0 or self.rate == 0.0:
            return math.inf
        t = -math.log(level) / self.rate
        if self.freeze_at is not None and t > self.freeze_at:
            return math.inf
        return t

    def to_dict(self) -> Dict[str, Any]:
        # always written: a missing key means "freeze at the horizon"
        return {"kind": "exponential", "rate": self.rate, "freeze_at": self.freeze_at}


@dataclass(frozen=True)
class TabulatedDecay(TimeDecay):
    """
    Monotone samples of f_t joined by a monotone cubic (PCHIP) interpolant

    The curve is held constant after the last sample time.
    """

    times: Tuple[float, ...]
    values: Tuple[float, ...]
    _interp: Any = field(init=False, repr=False, compare=False)
    _slope: Any = field(init=False, repr=False, compare=False)

    kind = "tabulated"

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if times.size < 2 or times.size != values.size:
            raise ParseError("Tabulated decay needs at least two (time, value) pairs",
                             field="time_part.times")
        if times[0] != 0.0 or np.any(np.diff(times) <= 0):
            raise ParseError("Tabulated decay times must start at 0 and increase strictly",
                             field="time_part.times")
        if not math.isclose(values[0], 1.0, rel_tol=0.0, abs_tol=1e-15):
            raise ParseError("Tabulated decay must start at 1", field="time_part.values")
        if np.any(values <= 0) or np.any(np.diff(values) > 0):
            raise ParseError("Tabulated decay values must be positive and nonincreasing",
                             field="time_part.values")
        interp = PchipInterpolator(times, values, extrapolate=False)
        object.__setattr__(self, "_interp", interp)
        object.__setattr__(self, "_slope", interp.derivative())

    def value(self, t: float) -> float:
        if t >= self.times[-1]:
            return self.values[-1]
        return float(self._interp(max(t, 0.0)))

    def derivative(self, t: float) -> float:
        if t > self.times[-1] or t < 0.0:
            return 0.0
        return min(float(self._slope(t)), 0.0)

    def inverse(self, level: float) -> float:
        if level >= 1.0:
            return 0.0
        if level < self.values[-1]:
            return math.inf
        j = next(i for i, v in enumerate(self.values) if v <= level)
        if self.values[j - 1] == level:
            return self.times[j - 1]
        return brentq(lambda u: self.value(u) - level, self.times[j - 1], self.times[j],
                      xtol=1e-15, rtol=4 * np.finfo(float).eps)

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": "tabulated", "times": list(self.times), "values": list(self.values)}


# ---------------------------------------------------------------------------
# Price impact f_Gamma
# ---------------------------------------------------------------------------

class ImpactCurve(ABC):
    """Endogenous price impact of liquidated units; nonincreasing, C^2, f_Gamma(0) = 1"""

    kind: str = "abstract"

    @abstractmethod
    def value(self, gamma: ArrayLike) -> ArrayLike:
        pass

    @abstractmethod
    def derivative(self, gamma: ArrayLike) -> ArrayLike:
        pass

    def log_derivative(self, gamma: ArrayLike) -> ArrayLike:
        """f_Gamma'(Gamma) / f_Gamma(Gamma)"""
        return self.derivative(gamma) / self.value(gamma)

    @abstractmethod
    def to_dict(self) -> Dict[str, Any]:
        pass

    @staticmethod
    def from_dict(data: Dict[str, Any]) -> "ImpactCurve":
        """Build an impact curve from its scenario-file representation"""
        kind = data.get("kind")
        if kind == "none":
            return NoImpact()
        if kind in ("linear", "exponential"):
            if "b" not in data:
                raise ParseError(f"{kind.capitalize()} impact needs b", field="impact_part.b")
            b = float(data["b"])
            return LinearImpact(b) if kind == "linear" else ExponentialImpact(b)
        if kind == "tabulated":
            try:
                return TabulatedImpact(units=tuple(float(v) for v in data["units"]),
                                       values=tuple(float(v) for v in data["values"]))
            except KeyError as e:
                raise ParseError("Tabulated impact needs units and values",
                                 field=f"impact_part.{e.args[0]}")
        raise ParseError(f"Unknown impact kind: {kind!r}", field="impact_part.kind")


@dataclass(frozen=True)
class NoImpact(ImpactCurve):
    """Perfectly liquid market (b = 0)"""

    kind = "none"

    @property
    def b(self) -> float:
        return 0.0

    def value(self, gamma: ArrayLike) -> ArrayLike:
        return np.ones_like(gamma, dtype=float) if isinstance(gamma, np.ndarray) else 1.0

    def derivative(self, gamma: ArrayLike) -> ArrayLike:
        return np.zeros_like(gamma, dtype=float) if isinstance(gamma, np.ndarray) else 0.0

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": "none"}


@dataclass(frozen=True)
class LinearImpact(ImpactCurve):
    """f_Gamma(Gamma) = 1 - b * Gamma, defined for Gamma < 1/b"""

    b: float

    kind = "linear"

    def __post_init__(self):
        if self.b < 0:
            raise ParseError(f"Linear impact b must be nonnegative, got {self.b}", field="impact_part.b")

    def _check(self, gamma: ArrayLike):
        if self.b > 0 and np.any(np.asarray(gamma) >= 1.0 / self.b):
            raise DomainExceeded(f"Linear impact with b={self.b} evaluated at Gamma >= 1/b")

    def value(self, gamma: ArrayLike) -> ArrayLike:
        self._check(gamma)
        return 1.0 - self.b * gamma

    def derivative(self, gamma: ArrayLike) -> ArrayLike:
        self._check(gamma)
        if isinstance(gamma, np.ndarray):
            return np.full_like(gamma, -self.b, dtype=float)
        return -self.b

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": "linear", "b": self.b}


@dataclass(frozen=True)
class ExponentialImpact(ImpactCurve):
    """f_Gamma(Gamma) = exp(-b * Gamma)"""

    b: float

    kind = "exponential"

    def __post_init__(self):
        if self.b < 0:
            raise ParseError(f"Exponential impact b must be nonnegative, got {self.b}",
                             field="impact_part.b")

    def value(self, gamma: ArrayLike) -> ArrayLike:
        return np.exp(-self.b * gamma) if isinstance(gamma, np.ndarray) else math.exp(-self.b * gamma)

    def derivative(self, gamma: ArrayLike) -> ArrayLike:
        return -self.b * self.value(gamma)

    def log_derivative(self, gamma: ArrayLike) -> ArrayLike:
        if isinstance(gamma, np.ndarray):
            return np.full_like(gamma, -self.b, dtype=float)
        return -self.b

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": "exponential", "b": self.b}


@dataclass(frozen=True)
class TabulatedImpact(ImpactCurve):
    """Monotone samples of f_Gamma on liquidated units, monotone cubic in between"""

    units: Tuple[float, ...]
    values: Tuple[float, ...]
    _interp: Any = field(init=False, repr=False, compare=False)
    _slope: Any = field(init=False, repr=False, compare=False)

    kind = "tabulated"

    def __post_init__(self):
        units = np.asarray(self.units, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if units.size < 2 or units.size != values.size:
            raise ParseError("Tabulated impact needs at least two (units, value) pairs",
                             field="impact_part.units")
        if units[0] != 0.0 or np.any(np.diff(units) <= 0):
            raise ParseError("Tabulated impact units must start at 0 and increase strictly",
                             field="impact_part.units")
        if not math.isclose(values[0], 1.0, rel_tol=0.0, abs_tol=1e-15):
            raise ParseError("Tabulated impact must start at 1", field="impact_part.values")
        if np.any(values <= 0) or np.any(np.diff(values) > 0):
            raise ParseError("Tabulated impact values must be positive and nonincreasing",
                             field="impact_part.values")
        interp = PchipInterpolator(units, values, extrapolate=False)
        object.__setattr__(self, "_interp", interp)
        object.__setattr__(self, "_slope", interp.derivative())

    def _check(self, gamma: ArrayLike):
        if np.any(np.asarray(gamma) > self.units[-1]):
            raise DomainExceeded(f"Tabulated impact evaluated beyond its last sample {self.units[-1]}")

    def value(self, gamma: ArrayLike) -> ArrayLike:
        self._check(gamma)
        out = self._interp(np.clip(gamma, 0.0, None))
        return out if isinstance(gamma, np.ndarray) else float(out)

    def derivative(self, gamma: ArrayLike) -> ArrayLike:
        self._check(gamma)
        out = np.minimum(self._slope(np.clip(gamma, 0.0, None)), 0.0)
        return out if isinstance(gamma, np.ndarray) else float(out)

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": "tabulated", "units": list(self.units), "values": list(self.values)}


# ---------------------------------------------------------------------------
# Full curve
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DemandCurve:
    """Inverse demand F(t, Gamma) = f_t(t) * f_Gamma(Gamma)"""

    time_part: TimeDecay
    impact_part: ImpactCurve

    def price(self, t: float, gamma: float) -> float:
        return self.time_part.value(t) * self.impact_part.value(gamma)

    def with_time_part(self, time_part: TimeDecay) -> "DemandCurve":
        return DemandCurve(time_part=time_part, impact_part=self.impact_part)

    def to_dict(self) -> Dict[str, Any]:
        return {"time_part": self.time_part.to_dict(), "impact_part": self.impact_part.to_dict()}

    @staticmethod
    def from_dict(data: Dict[str, Any], horizon: Optional[float] = None) -> "DemandCurve":
        if "time_part" not in data or "impact_part" not in data:
            raise ParseError("Demand curve needs time_part and impact_part", field="demand")
        return DemandCurve(time_part=TimeDecay.from_dict(data["time_part"], horizon),
                           impact_part=ImpactCurve.from_dict(data["impact_part"]))


def eval_ft(curve: DemandCurve, t: float) -> float:
    """Price factor from exogenous stress at time t"""
    return curve.time_part.value(t)


def eval_ft_prime(curve: DemandCurve, t: float) -> float:
    return curve.time_part.derivative(t)


def eval_fgamma(curve: DemandCurve, gamma: ArrayLike) -> ArrayLike:
    """Price factor from Gamma units liquidated"""
    return curve.impact_part.value(gamma)


def eval_fgamma_prime(curve: DemandCurve, gamma: ArrayLike) -> ArrayLike:
    return curve.impact_part.derivative(gamma)


# ---------------------------------------------------------------------------
# Admissibility
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AlphaInterval:
    """Open interval of admissible risk-weights"""

    lower: float
    upper: float

    def contains(self, alpha: float) -> bool:
        return self.lower < alpha < self.upper

    def __str__(self) -> str:
        return f"({self.lower:.6g}, {self.upper:.6g})"


def admissible_alpha_interval(curve: DemandCurve, market_cap: float, reg) -> AlphaInterval:
    """
    Risk-weights for which liquidation dynamics are monotone and unique

    Args:
        curve: Inverse demand curve of the asset
        market_cap: Market cap M of the asset (units)
        reg: Regulation providing theta_min

    Returns:
        (-M f'(0) / ((1 - M f'(0)) theta_min), 1 / theta_min)
    """
    slope = float(curve.impact_part.derivative(0.0))
    mf = market_cap * slope
    lower = -mf / ((1.0 - mf) * reg.theta_min)
    return AlphaInterval(lower=lower, upper=1.0 / reg.theta_min)


def admissible_impact_bound(alpha: float, market_cap: float, reg) -> float:
    """Largest exponential/linear b keeping a fixed alpha admissible"""
    at = alpha * reg.theta_min
    if at >= 1.0:
        return 0.0
    return at / ((1.0 - at) * market_cap)


@dataclass(frozen=True)
class MonotonicityCheck:
    """Outcome of the (M - Gamma) f'/f monotonicity test"""

    passed: bool
    violating_gamma: Optional[float] = None
    analytic: bool = False


def check_monotonicity_condition(curve: DemandCurve, market_cap: float,
                                 grid_points: int = 10_000, tol: float = 1e-10) -> MonotonicityCheck:
    """
    Verify that Gamma -> (M - Gamma) f'(Gamma) / f(Gamma) is nonpositive and nondecreasing

    Linear and exponential families pass analytically (linear needs b M <= 1);
    other curves are checked on a uniform grid of [0, M).
    """
    impact = curve.impact_part
    if isinstance(impact, (NoImpact, ExponentialImpact)):
        return MonotonicityCheck(passed=True, analytic=True)
    if isinstance(impact, LinearImpact):
        if impact.b * market_cap <= 1.0:
            return MonotonicityCheck(passed=True, analytic=True)
        return MonotonicityCheck(passed=False, violating_gamma=1.0 / impact.b, analytic=True)

    grid = market_cap * np.arange(grid_points) / grid_points
    try:
        h = (market_cap - grid) * impact.log_derivative(grid)
    except DomainExceeded:
        return MonotonicityCheck(passed=False, violating_gamma=float(getattr(impact, "units", [market_cap])[-1]))
    positive = np.nonzero(h > tol)[0]
    decreasing = np.nonzero(np.diff(h) < -tol)[0] + 1
    candidates = np.concatenate([positive, decreasing])
    if candidates.size == 0:
        return MonotonicityCheck(passed=True)
    first = int(candidates.min())
    logger.debug(f"Monotonicity condition fails at Gamma={grid[first]:.6g}")
    return MonotonicityCheck(passed=False, violating_gamma=float(grid[first]))


# ---------------------------------------------------------------------------
# Exogenous liquidations
# ---------------------------------------------------------------------------

def exogenous_to_ft(times: Sequence[float], eta: Sequence[float], impact: ImpactCurve) -> TabulatedDecay:
    """
    Convert an external liquidation schedule into a time decay

    Only exponential impact factorizes: f_t(t) = exp(-b eta(t)).

    Raises:
        NotExponentialImpact: If impact is not exponential with b > 0
    """
    if not isinstance(impact, ExponentialImpact) or impact.b <= 0:
        raise NotExponentialImpact("External liquidations map to a time decay only under "
                                   "exponential impact with b > 0")
    eta_arr = np.asarray(eta, dtype=float)
    if eta_arr[0] != 0.0 or np.any(np.diff(eta_arr) < 0):
        raise ParseError("External liquidations must start at 0 and be nondecreasing", field="eta")
    values = np.exp(-impact.b * eta_arr)
    return TabulatedDecay(times=tuple(float(v) for v in times), values=tuple(float(v) for v in values))


def ft_to_exogenous(decay: TimeDecay, impact: ImpactCurve, times: Sequence[float]) -> np.ndarray:
    """Inverse of exogenous_to_ft: eta(t) = -log(f_t(t)) / b"""
    if not isinstance(impact, ExponentialImpact) or impact.b <= 0:
        raise NotExponentialImpact("Exogenous liquidations are defined only for exponential impact")
    return np.array([-math.log(decay.value(t)) / impact.b for t in times])

"""
Stress Distributions
Laws of the exogenous stress: on the decay rate a or directly on f_t(t)
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Dict, Optional, Sequence, Tuple

import numpy as np
from scipy import stats
from scipy.integrate import trapezoid

from ..core.exceptions import ParseError, UnsupportedJoint

logger = logging.getLogger(__name__)


class StressKind(Enum):
    """Supported stress laws"""
    EXPONENTIAL_RATE = "exponential-rate"
    UNIFORM = "uniform"
    TABULATED_QUANTILE = "tabulated-quantile"
    POINT = "point"


class StressTarget(Enum):
    """Quantity the law describes"""
    RATE = "rate"
    FT_VALUE = "ft_value"


@dataclass(frozen=True)
class StressDistribution:
    """
    One-dimensional stress law

    'rate' laws describe a in f_t(t) = exp(-a min(t, T)); 'ft_value' laws
    describe f_t(t) itself at the evaluation time.
    """

    kind: StressKind
    applies_to: StressTarget = StressTarget.RATE
    params: Tuple[float, ...] = ()
    probabilities: Tuple[float, ...] = ()
    _frozen: Any = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        frozen = None
        if self.kind is StressKind.EXPONENTIAL_RATE:
            if self.applies_to is not StressTarget.RATE:
                raise ParseError("exponential-rate laws apply to the decay rate only", field="applies_to")
            (mu,) = self.params
            if mu <= 0:
                raise ParseError(f"Exponential rate parameter must be positive, got {mu}", field="mu")
            frozen = stats.expon(scale=1.0 / mu)
        elif self.kind is StressKind.UNIFORM:
            low, high = self.params
            if high <= low:
                raise ParseError(f"Uniform law needs low < high, got [{low}, {high}]", field="params")
            frozen = stats.uniform(loc=low, scale=high - low)
        elif self.kind is StressKind.TABULATED_QUANTILE:
            probs = np.asarray(self.probabilities, dtype=float)
            values = np.asarray(self.params, dtype=float)
            if probs.size < 2 or probs.size != values.size:
                raise ParseError("Tabulated quantiles need matching probabilities and values", field="params")
            if probs[0] != 0.0 or probs[-1] != 1.0 or np.any(np.diff(probs) <= 0) or np.any(np.diff(values) < 0):
                raise ParseError("Tabulated quantile function must be nondecreasing on [0, 1]", field="params")
        elif self.kind is StressKind.POINT:
            if len(self.params) != 1:
                raise ParseError("Point law needs one value", field="params")
        object.__setattr__(self, "_frozen", frozen)
        if self.applies_to is StressTarget.FT_VALUE:
            low, high = self.support
            if low < 0.0 or high > 1.0:
                raise ParseError("Laws on f_t(t) must live in [0, 1]", field="params")

    # -- constructors ----------------------------------------------------------------

    @classmethod
    def exponential_rate(cls, mu: float) -> "StressDistribution":
        """a ~ Exp(mu)"""
        return cls(StressKind.EXPONENTIAL_RATE, StressTarget.RATE, (float(mu),))

    @classmethod
    def uniform(cls, low: float, high: float, applies_to: StressTarget = StressTarget.RATE) -> "StressDistribution":
        return cls(StressKind.UNIFORM, applies_to, (float(low), float(high)))

    @classmethod
    def point(cls, value: float, applies_to: StressTarget = StressTarget.RATE) -> "StressDistribution":
        return cls(StressKind.POINT, applies_to, (float(value),))

    @classmethod
    def tabulated_quantile(cls, probabilities: Sequence[float], values: Sequence[float],
                           applies_to: StressTarget = StressTarget.RATE) -> "StressDistribution":
        return cls(StressKind.TABULATED_QUANTILE, applies_to, tuple(float(v) for v in values),
                   tuple(float(p) for p in probabilities))

    # -- evaluation ------------------------------------------------------------------

    @property
    def support(self) -> Tuple[float, float]:
        if self.kind is StressKind.POINT:
            return self.params[0], self.params[0]
        if self.kind is StressKind.TABULATED_QUANTILE:
            return self.params[0], self.params[-1]
        low, high = self._frozen.support()
        return float(low), float(high)

    def cdf(self, x: float) -> float:
        """P(X <= x)"""
        if self.kind is StressKind.POINT:
            return 1.0 if x >= self.params[0] else 0.0
        if self.kind is StressKind.TABULATED_QUANTILE:
            if x < self.params[0]:
                return 0.0
            if x >= self.params[-1]:
                return 1.0
            # right-continuous inverse of the piecewise-linear quantile function
            values = np.asarray(self.params)
            j = int(np.searchsorted(values, x, side="right"))
            lo_v, hi_v = values[j - 1], values[j]
            lo_p, hi_p = self.probabilities[j - 1], self.probabilities[j]
            return float(lo_p + (hi_p - lo_p) * (x - lo_v) / (hi_v - lo_v))
        return float(self._frozen.cdf(x))

    def prob_at_least(self, x: float) -> float:
        """P(X >= x)"""
        if self.kind is StressKind.POINT:
            return 1.0 if self.params[0] >= x else 0.0
        if self.kind is StressKind.TABULATED_QUANTILE:
            # atoms sit on flat stretches of the quantile function
            values = np.asarray(self.params)
            probs = np.asarray(self.probabilities)
            flat = (values[:-1] == x) & (values[1:] == x)
            atom = float(np.sum(np.diff(probs)[flat]))
            return min(1.0, 1.0 - self.cdf(x) + atom)
        return float(self._frozen.sf(x))

    def quantile(self, u: np.ndarray) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        if self.kind is StressKind.POINT:
            return np.full_like(u, self.params[0])
        if self.kind is StressKind.TABULATED_QUANTILE:
            return np.interp(u, self.probabilities, self.params)
        return self._frozen.ppf(u)

    def sample(self, rng: np.random.Generator, size: Optional[int] = None) -> Any:
        """Draw by inversion from a generator"""
        u = rng.random(size)
        out = self.quantile(u)
        return float(out) if size is None else out

    def stress_level(self, value: float, t: float, horizon: float) -> float:
        """f_t(t) implied by a drawn value"""
        if self.applies_to is StressTarget.FT_VALUE:
            return value
        return math.exp(-value * min(t, horizon))

    # -- serialization ---------------------------------------------------------------

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {"kind": self.kind.value, "applies_to": self.applies_to.value,
                                "params": list(self.params)}
        if self.probabilities:
            data["probabilities"] = list(self.probabilities)
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "StressDistribution":
        try:
            kind = StressKind(data["kind"])
            target = StressTarget(data.get("applies_to", "rate"))
        except (KeyError, ValueError) as e:
            raise ParseError(f"Invalid stress distribution: {e}", field="distribution")
        if kind is StressKind.EXPONENTIAL_RATE and "mu" in data:
            return cls.exponential_rate(float(data["mu"]))
        return cls(kind, target, tuple(float(v) for v in data.get("params", ())),
                   tuple(float(p) for p in data.get("probabilities", ())))


Sampler = Callable[[np.random.Generator], np.ndarray]


@dataclass(frozen=True)
class JointStress:
    """
    Joint stress law across assets

    Either independent marginals (None leaves an asset's scenario curve in
    place) or a sampler returning one draw per asset.
    """

    marginals: Tuple[Optional[StressDistribution], ...]
    sampler: Optional[Sampler] = field(default=None, compare=False)
    applies_to: StressTarget = StressTarget.RATE
    dependent: bool = False

    @classmethod
    def independent(cls, *marginals: Optional[StressDistribution]) -> "JointStress":
        targets = {m.applies_to for m in marginals if m is not None}
        if len(targets) > 1:
            raise ParseError("Independent marginals must all describe the same quantity", field="applies_to")
        return cls(marginals=tuple(marginals), applies_to=targets.pop() if targets else StressTarget.RATE)

    @classmethod
    def from_sampler(cls, sampler: Sampler, n_assets: int,
                     applies_to: StressTarget = StressTarget.RATE) -> "JointStress":
        return cls(marginals=(None,) * n_assets, sampler=sampler, applies_to=applies_to, dependent=True)

    @property
    def is_independent(self) -> bool:
        return not self.dependent and self.sampler is None

    def draw(self, rng: np.random.Generator) -> np.ndarray:
        """One joint draw; NaN marks assets without stress"""
        if self.sampler is not None:
            return np.atleast_1d(np.asarray(self.sampler(rng), dtype=float))
        return np.array([m.sample(rng) if m is not None else math.nan for m in self.marginals])

    def joint_probability(self, events: Sequence[Callable[[float], bool]],
                          marginal_probs: Sequence[Optional[float]], n_samples: int = 100_000,
                          seed: int = 0) -> float:
        """
        P(all events) for per-asset events on the drawn value

        Independent laws multiply the marginal probabilities. Sampler laws
        sort the draws lexicographically and integrate the joint event
        indicator with the trapezoidal rule over the empirical quantile axis
        [0, 1]; a single draw returns its indicator.

        Raises:
            UnsupportedJoint: If a dependent law has no sampler
            ParseError: If n_samples < 1
        """
        if self.is_independent:
            prob = 1.0
            for p in marginal_probs:
                if p is not None:
                    prob *= p
            return prob
        if self.sampler is None:
            raise UnsupportedJoint("Joint stress law has neither an analytic form nor a sampler")
        if n_samples < 1:
            raise ParseError(f"n_samples must be >= 1, got {n_samples}", field="n_samples")
        rng = np.random.default_rng(seed)
        draws = np.vstack([self.draw(rng) for _ in range(n_samples)])
        draws = draws[np.lexsort(draws.T[::-1])]
        hits = np.array([all(event(v) for event, v in zip(events, row)) for row in draws], dtype=float)
        if n_samples == 1:
            return float(hits[0])
        return float(trapezoid(hits, np.linspace(0.0, 1.0, n_samples)))


def as_joint(stress: Any, n_assets: int) -> JointStress:
    """Promote a single distribution to a joint law on the first asset"""
    if isinstance(stress, JointStress):
        return stress
    if isinstance(stress, StressDistribution):
        return JointStress.independent(stress, *([None] * (n_assets - 1)))
    raise UnsupportedJoint(f"Unsupported stress specification: {type(stress).__name__}")

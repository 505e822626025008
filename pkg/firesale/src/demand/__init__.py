"""
Inverse Demand Curves
Time decay, price impact and admissibility checks
"""

from .curves import (
    TimeDecay,
    ConstantDecay,
    ExponentialDecay,
    TabulatedDecay,
    ImpactCurve,
    NoImpact,
    LinearImpact,
    ExponentialImpact,
    TabulatedImpact,
    DemandCurve,
    AlphaInterval,
    MonotonicityCheck,
    eval_ft,
    eval_ft_prime,
    eval_fgamma,
    eval_fgamma_prime,
    admissible_alpha_interval,
    admissible_impact_bound,
    check_monotonicity_condition,
    exogenous_to_ft,
    ft_to_exogenous,
)

__all__ = [
    # Time decay
    'TimeDecay',
    'ConstantDecay',
    'ExponentialDecay',
    'TabulatedDecay',

    # Price impact
    'ImpactCurve',
    'NoImpact',
    'LinearImpact',
    'ExponentialImpact',
    'TabulatedImpact',

    # Curve
    'DemandCurve',
    'eval_ft',
    'eval_ft_prime',
    'eval_fgamma',
    'eval_fgamma_prime',

    # Admissibility
    'AlphaInterval',
    'MonotonicityCheck',
    'admissible_alpha_interval',
    'admissible_impact_bound',
    'check_monotonicity_condition',

    # Exogenous liquidations
    'exogenous_to_ft',
    'ft_to_exogenous',
]

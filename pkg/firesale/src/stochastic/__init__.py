"""
Probabilistic Stress Tests
Stress laws, analytic price-distribution bounds and Monte Carlo
"""

from .distributions import JointStress, StressDistribution, StressKind, StressTarget, as_joint
from .stress_test import (
    MonteCarloResult,
    cdf_table,
    dkw_radius,
    draw_generator,
    monte_carlo,
    phi_inverse,
    price_cdf_lower_bound,
    price_response,
    price_segment,
    random_ft_bound,
    stress_threshold,
)

__all__ = [
    # Distributions
    'JointStress',
    'StressDistribution',
    'StressKind',
    'StressTarget',
    'as_joint',

    # Analytic bounds
    'phi_inverse',
    'price_segment',
    'stress_threshold',
    'price_cdf_lower_bound',
    'random_ft_bound',

    # Monte Carlo
    'MonteCarloResult',
    'cdf_table',
    'dkw_radius',
    'draw_generator',
    'monte_carlo',
    'price_response',
]

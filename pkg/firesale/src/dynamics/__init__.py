"""
Regime Dynamics
"""

from .regime import (
    RegimeRHS,
    compute_Z,
    compute_lambda,
    regime_determinants,
    rhs,
    sherman_morrison_solve,
    state_derivative,
)

__all__ = [
    'RegimeRHS',
    'compute_Z',
    'compute_lambda',
    'regime_determinants',
    'rhs',
    'sherman_morrison_solve',
    'state_derivative',
]

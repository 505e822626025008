"""
Fire-Sale Simulator
Event-driven integration of the liquidation dynamics
"""

from .integrator import (
    IntegratorConfig,
    exponential_liquidation_cap,
    locate_activation,
    renormalize_active,
    simulate,
)

__all__ = [
    'IntegratorConfig',
    'exponential_liquidation_cap',
    'locate_activation',
    'renormalize_active',
    'simulate',
]

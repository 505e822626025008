"""
Stress-Test Bounds
Lambert W and worst-case liquidation schedules
"""

from .lambert import lambert_w, lambert_w_exp
from .schedule import (
    AssetLadder,
    BoundSchedule,
    build_bound_schedule,
    bounded_liquidations,
    bounded_price,
    decomposition_weights,
    exp_hitting_time,
)

__all__ = [
    # Lambert W
    'lambert_w',
    'lambert_w_exp',

    # Schedules
    'AssetLadder',
    'BoundSchedule',
    'build_bound_schedule',
    'bounded_liquidations',
    'bounded_price',
    'decomposition_weights',
    'exp_hitting_time',
]

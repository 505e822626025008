"""
Lambert W
Principal branch of the inverse of w -> w exp(w) by Halley iteration
"""

import logging
import math

from ..core.exceptions import DomainError

logger = logging.getLogger(__name__)

BRANCH_POINT = -math.exp(-1.0)
BRANCH_TOL = 1e-15
MAX_ITERATIONS = 50
LOG_OVERFLOW = 700.0


def _initial_guess(z: float) -> float:
    if z < -0.25:
        # series around the branch point
        p = math.sqrt(max(2.0 * (math.e * z + 1.0), 0.0))
        return -1.0 + p - p * p / 3.0 + 11.0 * p ** 3 / 72.0
    if z <= math.e:
        return math.log1p(z)
    l1 = math.log(z)
    l2 = math.log(l1)
    return l1 - l2 + l2 / l1


def lambert_w(z: float) -> float:
    """
    Principal branch W_0(z)

    Args:
        z: Argument, >= -1/e

    Returns:
        w with w exp(w) = z and w >= -1

    Raises:
        DomainError: If z < -1/e
    """
    z = float(z)
    if z < BRANCH_POINT - BRANCH_TOL:
        raise DomainError(f"Lambert W is undefined for z={z!r} < -1/e")
    if z <= BRANCH_POINT + BRANCH_TOL:
        return -1.0
    if z == 0.0:
        return 0.0
    if math.isinf(z):
        return math.inf

    w = _initial_guess(z)
    for _ in range(MAX_ITERATIONS):
        ew = math.exp(w)
        f = w * ew - z
        w1 = w + 1.0
        if w1 == 0.0:
            break
        step = f / (ew * w1 - (w + 2.0) * f / (2.0 * w1))
        w -= step
        if abs(step) <= 1e-16 * (1.0 + abs(w)):
            break
    return max(w, -1.0)


def lambert_w_exp(log_z: float) -> float:
    """
    W_0(exp(log_z)) for arguments too large to exponentiate

    Solves w + log(w) = log_z by Newton iteration when exp(log_z) would overflow.
    """
    if log_z < LOG_OVERFLOW:
        return lambert_w(math.exp(log_z))
    w = log_z - math.log(log_z)
    for _ in range(MAX_ITERATIONS):
        step = (w + math.log(w) - log_z) / (1.0 + 1.0 / w)
        w -= step
        if abs(step) <= 1e-16 * w:
            break
    return w

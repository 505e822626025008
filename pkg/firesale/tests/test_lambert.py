"""
Tests for the Lambert W evaluation
"""

import math

import numpy as np
import pytest
from scipy.special import lambertw

from firesale.src.bounds.lambert import BRANCH_POINT, lambert_w, lambert_w_exp
from firesale.src.core.exceptions import DomainError


class TestLambertW:
    """Test the principal branch"""

    def test_known_values(self):
        assert lambert_w(0.0) == 0.0
        assert lambert_w(1.0) == pytest.approx(0.5671432904097838, abs=1e-15)
        assert lambert_w(math.e) == pytest.approx(1.0, abs=1e-15)
        assert lambert_w(BRANCH_POINT) == pytest.approx(-1.0, abs=1e-12)

    def test_below_branch_point(self):
        with pytest.raises(DomainError):
            lambert_w(-0.5)

    def test_residual_on_log_grid(self):
        offsets = np.logspace(-12, math.log10(1e8 - BRANCH_POINT), 10_000)
        for z in BRANCH_POINT + offsets:
            w = lambert_w(z)
            assert abs(w * math.exp(w) - z) <= 1e-13 * max(1.0, abs(z))

    def test_agrees_with_scipy(self):
        for z in (-0.3, -0.1, 0.5, 3.0, 250.0, 1e6):
            assert lambert_w(z) == pytest.approx(float(lambertw(z).real), rel=1e-13)

    def test_infinity(self):
        assert lambert_w(math.inf) == math.inf


class TestLambertWExp:
    """Test the overflow-safe form W(exp(x))"""

    def test_matches_direct_evaluation(self):
        for x in (-5.0, 0.0, math.log(5.0), 50.0):
            assert lambert_w_exp(x) == pytest.approx(lambert_w(math.exp(x)), rel=1e-14)

    def test_large_argument(self):
        w = lambert_w_exp(800.0)
        assert w + math.log(w) == pytest.approx(800.0, rel=1e-14)

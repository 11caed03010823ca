import math

import numpy as np
import pytest

from app.core.errors import FitError
from app.core.fitting import convergence_order, decay_exponent, growth_rate


class TestSlopeFits:
    def test_decay_exponent(self):
        t = np.geomspace(10.0, 2000.0, 20)
        fit = decay_exponent(t, -5.0 * t**-1.5)
        assert fit.slope == pytest.approx(1.5)
        assert math.exp(fit.intercept) == pytest.approx(5.0)
        assert fit.residual == pytest.approx(0.0, abs=1e-10)

    def test_decay_exponent_window(self):
        t = np.geomspace(1.0, 1000.0, 30)
        values = np.where(t < 20.0, 1.0, t**-2.0)
        assert decay_exponent(t, values, t_min=20.0).slope == pytest.approx(2.0)

    def test_identically_zero_has_infinite_exponent(self):
        fit = decay_exponent([1.0, 2.0, 4.0], [0.0, 0.0, 0.0])
        assert math.isinf(fit.slope)
        assert fit.n_points == 0

    def test_zeros_are_skipped(self):
        t = np.array([10.0, 20.0, 40.0, 80.0])
        fit = decay_exponent(t, [0.0, 1.0 / 20.0, 1.0 / 40.0, 1.0 / 80.0])
        assert fit.slope == pytest.approx(1.0)
        assert fit.n_points == 3

    def test_growth_rate(self):
        s = np.linspace(0.0, 3.0, 15)
        assert growth_rate(s, 0.2 * np.exp(0.3 * s)).slope == pytest.approx(0.3)

    def test_convergence_order(self):
        h = np.array([0.1, 0.05, 0.025])
        assert convergence_order(h, 7.0 * h**2).slope == pytest.approx(2.0)

    def test_single_point(self):
        with pytest.raises(FitError):
            convergence_order([0.1], [0.01])

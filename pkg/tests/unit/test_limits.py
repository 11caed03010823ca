import math

import numpy as np
import pytest

from app.asymptotics.limits import fit_limit
from app.core.errors import FitError


class TestFitLimit:
    def setup_method(self):
        """Set up test fixtures"""
        self.t = np.geomspace(10.0, 1000.0, 12)

    def test_power_law_approach(self):
        fit = fit_limit(self.t, 2.0 + 3.0 * self.t**-0.7)
        assert fit.limit == pytest.approx(2.0, abs=1e-8)
        assert fit.gamma == pytest.approx(0.7, abs=1e-5)
        assert fit.amplitude == pytest.approx(3.0, rel=1e-4)
        assert fit.error <= 1e-8
        assert fit.n_points == 12
        assert not fit.two_term

    def test_two_term_model(self):
        f = -1.0 + 0.5 * self.t**-0.5 + 4.0 * self.t**-1.0
        fit = fit_limit(self.t, f)
        assert fit.two_term
        assert fit.limit == pytest.approx(-1.0, abs=1e-4)

    def test_constant_sequence(self):
        fit = fit_limit(self.t, np.full(self.t.size, 0.25))
        assert fit.limit == 0.25
        assert math.isinf(fit.gamma)
        assert fit.error == 0.0

    def test_too_few_samples(self):
        with pytest.raises(FitError):
            fit_limit([10.0, 100.0, 1000.0], [1.0, 2.0, 3.0])

    def test_span_too_short(self):
        t = np.linspace(10.0, 50.0, 8)
        with pytest.raises(FitError):
            fit_limit(t, 1.0 / t)

    def test_non_finite_samples(self):
        f = 1.0 / self.t
        f[3] = np.nan
        with pytest.raises(FitError):
            fit_limit(self.t, f)

    def test_logarithmic_growth_does_not_converge(self):
        with pytest.raises(FitError):
            fit_limit(self.t, np.log(self.t))

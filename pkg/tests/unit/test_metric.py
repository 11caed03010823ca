import numpy as np
import pytest

from app.core.errors import ConfigError, DomainError
from app.frames.curvature import riemann_lower
from app.metric.family import (
    Direction,
    MetricKind,
    christoffel,
    fibonacci_directions,
    flat,
    isotropic,
    null_form_G,
    satisfies_null_condition,
)
from app.metric.presets import format_matrix, from_preset, parse_matrix, parse_speed_polynomial


class TestDirection:
    def test_from_vector_normalizes(self):
        """Test arbitrary vectors are normalized"""
        d = Direction.from_vector([0.0, 3.0, 4.0])
        assert np.linalg.norm(d.omega) == pytest.approx(1.0)
        assert d.omega_hat[0] == -1.0
        assert d.omega_hat[1:] == pytest.approx([0.0, 0.6, 0.8])

    def test_non_unit_rejected(self):
        with pytest.raises(DomainError):
            Direction(np.array([1.0, 1.0, 0.0]))

    def test_fibonacci_directions_are_unit(self):
        dirs = fibonacci_directions(50)
        assert len(dirs) == 50
        assert all(np.linalg.norm(d.omega) == pytest.approx(1.0) for d in dirs)


class TestMetricFamily:
    def setup_method(self):
        """Set up test fixtures"""
        self.quasilinear = isotropic([1.0, 1.0])

    def test_flat_family(self):
        fam = flat()
        assert fam.is_flat
        assert fam.kind is MetricKind.ISOTROPIC
        assert fam.inverse(0.1) == pytest.approx(np.diag([-1.0, 1.0, 1.0, 1.0]))

    def test_isotropic_inverse_metric(self):
        """Test g^ij = c(u)^2 delta_ij"""
        g = self.quasilinear.inverse(0.1)
        assert g[0, 0] == -1.0
        assert g[1, 1] == pytest.approx(1.21)
        assert g[0, 1] == 0.0

    def test_isotropic_requires_unit_speed_at_zero(self):
        with pytest.raises(ConfigError):
            isotropic([2.0, 1.0])

    def test_u_outside_validity(self):
        with pytest.raises(DomainError):
            self.quasilinear.inverse(0.5)

    def test_lower_is_inverse(self):
        u = 0.07
        assert self.quasilinear.lower(u) @ self.quasilinear.inverse(u) == pytest.approx(np.eye(4))

    def test_lower_du_matches_difference_quotient(self):
        u, du = 0.05, 1e-6
        fd = (self.quasilinear.lower(u + du) - self.quasilinear.lower(u - du)) / (2.0 * du)
        assert np.max(np.abs(self.quasilinear.lower_du(u) - fd)) < 1e-8

    def test_wave_speed(self):
        assert self.quasilinear.wave_speed(0.1) == pytest.approx(1.1)
        assert self.quasilinear.wave_speed_du(0.1) == pytest.approx(1.0)

    def test_non_symmetric_coefficient_rejected(self):
        g1 = np.zeros((4, 4))
        g1[1, 2] = 1.0
        with pytest.raises(ConfigError):
            from_preset("general", {"g1": format_matrix(g1)})


class TestNullForm:
    def test_quasilinear_weak_null(self, quasilinear_family, direction):
        """Test G(omega) = 2 for c = 1 + u"""
        assert null_form_G(quasilinear_family, direction) == pytest.approx(2.0)
        assert not satisfies_null_condition(quasilinear_family, n_directions=20)

    def test_flat_satisfies_null_condition(self, flat_family, direction):
        assert null_form_G(flat_family, direction) == 0.0
        assert satisfies_null_condition(flat_family, n_directions=20)

    def test_quadratic_only_perturbation_satisfies_null_condition(self):
        """Test g_1 = 0 with a nonzero g_2 has G = 0 everywhere"""
        g2 = np.diag([0.0, 1.0, 1.0, 1.0])
        fam = from_preset("general", {"g2": format_matrix(g2)})
        assert fam.degree == 2
        assert not fam.is_flat
        assert satisfies_null_condition(fam, n_directions=20)


class TestChristoffel:
    def test_flat_vanishes(self, flat_family):
        assert not christoffel(flat_family, 0.0, [1.0, 0.0, 0.0, 0.0]).any()

    def test_symmetric_in_lower_indices(self, quasilinear_family):
        gamma = christoffel(quasilinear_family, 0.05, [0.01, 0.02, -0.03, 0.01])
        assert gamma == pytest.approx(np.swapaxes(gamma, 1, 2))

    def test_riemann_antisymmetry(self, quasilinear_family):
        du = np.array([0.01, 0.02, -0.03, 0.01])
        ddu = np.diag([0.001, 0.002, 0.0, -0.001])
        riem = riemann_lower(quasilinear_family, 0.05, du, ddu)
        assert np.max(np.abs(riem + np.swapaxes(riem, 0, 1))) < 1e-12
        assert np.max(np.abs(riem + np.swapaxes(riem, 2, 3))) < 1e-12


class TestPresets:
    def test_parse_speed_polynomial(self):
        assert parse_speed_polynomial("1+u+0.5u^2") == pytest.approx([1.0, 1.0, 0.5])

    def test_speed_degree_limit(self):
        with pytest.raises(ConfigError):
            parse_speed_polynomial("1+u^3")

    def test_unparseable_speed(self):
        with pytest.raises(ConfigError):
            parse_speed_polynomial("1+v")

    def test_isotropic_preset(self):
        fam = from_preset("isotropic:c=1+u")
        assert fam.c_coeffs == (1.0, 1.0)

    def test_unknown_preset(self):
        with pytest.raises(ConfigError):
            from_preset("schwarzschild")

    def test_general_preset(self):
        g1 = "0 0 0 0; 0 1 0 0; 0 0 1 0; 0 0 0 1"
        fam = from_preset("general", {"g1": g1})
        assert fam.kind is MetricKind.GENERAL
        assert null_form_G(fam, Direction.from_vector([1.0, 0.0, 0.0])) == pytest.approx(1.0)

    def test_matrix_round_trip(self):
        m = np.arange(16.0).reshape(4, 4) / 7.0
        assert np.array_equal(parse_matrix(format_matrix(m)), m)

    def test_bad_matrix_shape(self):
        with pytest.raises(ConfigError):
            parse_matrix("1 2; 3 4")

import math

import numpy as np
import pytest

from app.core.errors import ArtifactError, BlowupDetected, ConfigError, CoverageError
from app.reduced.hormander import (
    ComparisonModel,
    burgers_blowup_time,
    burgers_fd_blowup,
    hormander_step,
    riccati_blowup_time,
)
from app.reduced.solution import (
    ReducedSolution,
    eval_reduced,
    eval_U,
    integrate_reduced,
    read_reduced_csv,
    write_reduced_csv,
)


class TestReducedSolution:
    def test_exterior_values_grafted(self):
        q = np.array([-1.0, 0.0, 1.0, 2.0, 3.0])
        sol = ReducedSolution(q, np.full(5, -3.0), np.full(5, 0.5), 2.0, 1.0)
        assert list(sol.A1) == [-3.0, -3.0, -3.0, -2.0, -2.0]
        assert list(sol.A2) == [0.5, 0.5, 0.5, 0.0, 0.0]
        assert sol.A[-1] == 0.0
        assert sol.a1(10.0) == -2.0

    def test_nodes_must_increase(self):
        with pytest.raises(CoverageError):
            ReducedSolution(np.array([0.0, 0.0, 1.0]), np.zeros(3), np.zeros(3), 2.0, 1.0)

    def test_lookup_below_table(self, reduced_tables):
        with pytest.raises(CoverageError):
            reduced_tables.a1(-7.0)
        with pytest.raises(CoverageError):
            eval_U(reduced_tables, 0.0, -7.0)

    def test_closed_form_at_zero(self, reduced_tables):
        q = np.linspace(-5.0, 0.5, 12)
        mu, uq = eval_reduced(reduced_tables, 0.0, q)
        assert mu == pytest.approx(reduced_tables.a1(q))
        assert uq == pytest.approx(reduced_tables.a2(q))

    def test_product_identity(self, reduced_tables):
        q = np.linspace(-5.0, 0.5, 12)
        for s in (0.3, 1.7, 6.0):
            mu, uq = eval_reduced(reduced_tables, s, q)
            assert mu * uq == pytest.approx(-2.0 * reduced_tables.a(q), abs=1e-14)

    def test_a_prime(self, reduced_tables):
        q, h = -2.35, 1e-5
        fd = (reduced_tables.a(q + h) - reduced_tables.a(q - h)) / (2.0 * h)
        assert reduced_tables.a_prime(q) == pytest.approx(fd, abs=1e-6)

    def test_potential_slope(self, reduced_tables):
        """Test d_q U = U_q"""
        s, q, h = 1.2, -1.55, 1e-3
        slope = (eval_U(reduced_tables, s, q + h) - eval_U(reduced_tables, s, q - h)) / (2.0 * h)
        assert slope == pytest.approx(float(eval_reduced(reduced_tables, s, q)[1][0]), abs=1e-6)
        assert eval_U(reduced_tables, s, 1.0) == 0.0

    def test_numerical_flow_matches_closed_form(self):
        A1, A2, G = -2.3, 0.4, 2.0
        traj = integrate_reduced(A1, A2, G, s_end=3.0)
        A = -0.5 * A1 * A2
        assert traj.mu == pytest.approx(A1 * np.exp(-0.5 * G * A * traj.s), abs=1e-10)
        assert traj.U_q == pytest.approx(A2 * np.exp(0.5 * G * A * traj.s), abs=1e-10)
        assert traj.product_drift <= 1e-10

    def test_csv(self, tmp_path, reduced_tables):
        path = tmp_path / "reduced.csv"
        write_reduced_csv(reduced_tables, path)
        assert path.read_text().startswith("# G=2\n")
        back = read_reduced_csv(path, R=1.0)
        assert back.G == 2.0
        assert np.array_equal(back.A2, reduced_tables.A2)

    def test_csv_without_header(self, tmp_path):
        path = tmp_path / "reduced.csv"
        path.write_text("q,A1,A2,A\n0,-2,0,0\n")
        with pytest.raises(ArtifactError):
            read_reduced_csv(path, R=1.0)


class TestBlowupTimes:
    def test_riccati_time(self):
        assert riccati_blowup_time([0.5, 2.0, -1.0]) == 0.5
        assert math.isinf(riccati_blowup_time([-0.5, 0.0]))

    def test_burgers_time(self):
        q = np.linspace(-1.0, 1.0, 21)
        assert burgers_blowup_time(q, 0.25 * q) == pytest.approx(8.0)
        assert math.isinf(burgers_blowup_time(q, -q))

    def test_burgers_finite_differences(self):
        q = np.linspace(0.0, 2.0 * np.pi, 256, endpoint=False)
        s_fd = burgers_fd_blowup(q, -0.5 * np.sin(q), periodic=True)
        assert s_fd == pytest.approx(4.0, rel=0.02)


class TestComparisonModels:
    def setup_method(self):
        """Set up test fixtures"""
        self.q = np.linspace(-4.0, 4.0, 161)
        self.v0 = 0.5 * np.exp(-self.q**2)

    def test_riccati_blows_up(self):
        with pytest.raises(BlowupDetected) as exc_info:
            hormander_step(self.q, self.v0, 2.0, "riccati", s_end=5.0)
        assert exc_info.value.model == "riccati"
        assert exc_info.value.s_star == pytest.approx(2.0)

    def test_riccati_before_blowup(self):
        result = hormander_step(self.q, self.v0, 2.0, ComparisonModel.RICCATI, s_end=1.0, n_out=11)
        assert result.values[-1] == pytest.approx(self.v0 / (1.0 - self.v0))
        assert not result.blew_up

    def test_burgers_blows_up(self):
        q = np.linspace(0.0, 2.0 * np.pi, 256, endpoint=False)
        with pytest.raises(BlowupDetected) as exc_info:
            hormander_step(q, -0.5 * np.sin(q), 2.0, "burgers", s_end=10.0, periodic=True)
        assert exc_info.value.s_star == pytest.approx(4.0, rel=1e-3)

    def test_burgers_before_blowup(self):
        result = hormander_step(self.q, self.v0, 2.0, "burgers", s_end=1.0, n_out=11)
        assert result.q.shape == (11, self.q.size)
        assert result.max_slope[-1] > result.max_slope[0]

    def test_geometric_model_is_global(self):
        """Test the geometric model survives beyond both blowup times"""
        result = hormander_step(self.q, self.v0, 2.0, "geometric_qwe", s_end=20.0, n_out=41)
        assert not result.blew_up
        assert np.all(np.isfinite(result.max_slope))
        assert np.all(np.diff(result.q, axis=0) >= -1e-12)
        assert result.growth is not None

    def test_too_few_nodes(self):
        with pytest.raises(ConfigError):
            hormander_step(self.q[:4], self.v0[:4], 2.0, "burgers", s_end=1.0)

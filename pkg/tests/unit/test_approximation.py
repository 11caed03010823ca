import numpy as np
import pytest

from app.approximation.compare import (
    DECAY_COLUMNS,
    band_grid,
    compare,
    reparam_defect,
    write_decay_csv,
)
from app.approximation.qhat import solve_qhat, solve_ray
from app.approximation.reparametrization import build_F, reparametrization_from_reduced
from app.approximation.utilde import ROUTE_TOL, approx_from_rows, build_utilde
from app.core.errors import ConfigError, CoverageError, DomainError
from app.core.worker_pool import WorkerPool
from app.geodesics.region import RegionSpec, make_seeds
from app.geodesics.sheet import build_sheet
from app.reduced.solution import ReducedSolution


@pytest.fixture
def trivial_tables():
    q = np.linspace(-6.0, 2.0, 81)
    return ReducedSolution(q, np.full(q.size, -2.0), np.zeros(q.size), 2.0, 1.0)


class TestReparametrization:
    def test_trivial_tables_give_identity(self, trivial_tables):
        rep = reparametrization_from_reduced(trivial_tables)
        q = np.linspace(-5.5, 3.0, 18)
        assert rep.F_of(q) == pytest.approx(q, abs=1e-12)
        assert rep.F_hat(q) == pytest.approx(q, abs=1e-12)
        assert rep.F_q_of(q) == pytest.approx(np.ones(q.size))

    def test_inverse(self, reduced_tables):
        rep = reparametrization_from_reduced(reduced_tables)
        q = np.linspace(-5.8, 1.8, 40)
        assert rep.F_hat(rep.F_of(q)) == pytest.approx(q, abs=1e-10)
        assert np.all(np.diff(rep.F) > 0.0)

    def test_exterior_identity(self, reduced_tables):
        rep = reparametrization_from_reduced(reduced_tables)
        q = np.array([1.0, 1.5, 4.0])
        assert np.array_equal(rep.F_of(q), q)
        assert np.array_equal(rep.F_hat(q), q)

    def test_slope_bounds(self, reduced_tables):
        """Test 0 < F_q = -2 / A1 < 2 when A1 < -1"""
        rep = reparametrization_from_reduced(reduced_tables)
        F_q = rep.F_q_of(np.linspace(-5.8, 1.8, 40))
        assert np.all(F_q > 0.0)
        assert np.all(F_q < 2.0)

    def test_A_hat(self, reduced_tables):
        rep = reparametrization_from_reduced(reduced_tables)
        q = np.linspace(-4.0, 0.5, 10)
        assert rep.A_hat(rep.F_of(q)) == pytest.approx(reduced_tables.a(q), abs=1e-9)

    def test_A1_must_stay_below_minus_one(self):
        q = np.linspace(-2.0, 2.0, 9)
        with pytest.raises(DomainError):
            build_F(q, np.full(q.size, -0.5), 1.0)

    def test_below_table(self, reduced_tables):
        rep = reparametrization_from_reduced(reduced_tables)
        with pytest.raises(CoverageError):
            rep.F_of(-7.0)
        with pytest.raises(CoverageError):
            rep.F_hat(rep.F[0] - 1.0)

    def test_A_hat_needs_tables(self):
        q = np.linspace(-2.0, 2.0, 9)
        rep = build_F(q, np.full(q.size, -2.5), 1.0)
        with pytest.raises(CoverageError):
            rep.A_hat(0.0)
        assert all(np.isnan(row[3]) for row in rep.rows())


class TestQhat:
    def test_unperturbed_rays(self, trivial_tables):
        """Test q_hat = r - t when s = 0 along every ray"""
        rep = reparametrization_from_reduced(trivial_tables)
        region = RegionSpec(kappa=0.5, T0=10.0, R=1.0)
        value = solve_ray(rep, 2.0, region, 80.0, 77.5)
        assert value.qhat == pytest.approx(-2.5, abs=1e-9)
        assert value.mu_hat == pytest.approx(-2.0)
        assert value.nu_hat == pytest.approx(0.0, abs=1e-9)

    def test_exterior_shortcut(self, reduced_tables):
        rep = reparametrization_from_reduced(reduced_tables)
        region = RegionSpec(epsilon=0.02)
        value = solve_ray(rep, 2.0, region, 80.0, 81.5)
        assert (value.qhat, value.mu_hat, value.nu_hat) == (1.5, -2.0, 0.0)

    def test_ray_before_time_zero(self, trivial_tables):
        rep = reparametrization_from_reduced(trivial_tables)
        with pytest.raises(CoverageError):
            solve_ray(rep, 2.0, RegionSpec(), 1.0, 0.5)

    def test_table_is_monotone(self, reduced_tables):
        rep = reparametrization_from_reduced(reduced_tables)
        region = RegionSpec(kappa=0.5, T0=10.0, R=1.0, epsilon=0.02)
        grid = {t: t + np.linspace(-4.0, 1.5, 12) for t in (100.0, 400.0)}
        table = solve_qhat(rep, 2.0, region, grid, pool=WorkerPool(max_workers=2, name="qhat-test"))
        assert table.is_monotone()
        assert table.index_of(400.0) == 1
        assert table.qhat[0][-1] == pytest.approx(1.5)
        assert len(list(table.rows())) == 24
        with pytest.raises(CoverageError):
            table.index_of(200.0)


class TestUtilde:
    def setup_method(self):
        """Set up test fixtures"""
        self.region = RegionSpec(kappa=0.5, T0=10.0, R=1.0, epsilon=0.02)
        self.grid = {t: t + np.linspace(-4.0, 1.5, 6) for t in (200.0, 400.0)}

    def _approx(self, tables):
        rep = reparametrization_from_reduced(tables)
        table = solve_qhat(rep, tables.G, self.region, self.grid)
        return build_utilde(rep, tables, table, self.region)

    def test_routes_agree(self, reduced_tables):
        approx = self._approx(reduced_tables)
        assert approx.route_defect() <= ROUTE_TOL
        assert np.any(approx.u_tilde[0] != 0.0)

    def test_zero_beyond_support(self, reduced_tables):
        approx = self._approx(reduced_tables)
        exterior = approx.table.r[1] - approx.times[1] > 1.0
        assert not approx.u_tilde[1][exterior].any()

    def test_trivial_tables(self, trivial_tables):
        approx = self._approx(trivial_tables)
        assert all(not u.any() for u in approx.u_tilde)

    def test_off_grid_evaluation(self, reduced_tables):
        approx = self._approx(reduced_tables)
        t, r = float(approx.times[0]), float(approx.table.r[0][2])
        assert approx.evaluate(t, r) == pytest.approx(approx.u_tilde[0][2], rel=1e-9)

    def test_rebuild_from_rows(self, reduced_tables):
        approx = self._approx(reduced_tables)
        rebuilt = approx_from_rows(approx.rows(), approx.rep, reduced_tables, self.region)
        assert np.array_equal(rebuilt.times, approx.times)
        assert all(np.array_equal(a, b) for a, b in zip(rebuilt.u_tilde, approx.u_tilde, strict=True))

    def test_needs_reduced_tables(self, reduced_tables):
        rep = build_F(reduced_tables.q, reduced_tables.A1, 1.0)
        table = solve_qhat(reparametrization_from_reduced(reduced_tables), 2.0, self.region, self.grid)
        with pytest.raises(CoverageError):
            build_utilde(rep, reduced_tables, table, self.region)


class TestBandComparison:
    def setup_method(self):
        """Set up test fixtures"""
        self.region = RegionSpec(kappa=0.5, T0=10.0, R=1.0)

    def test_band_grid(self, zero_field):
        grid = band_grid(zero_field, self.region, [60.0, 100.0], gamma=0.5, q_min=-5.0)
        for t, r in grid.items():
            assert r.size
            assert np.all(np.abs(r - t) <= t**0.5)
            assert np.all(r - t >= -5.0)
            assert np.all(r > self.region.cone_radius(t))

    def test_band_exponent_range(self, zero_field):
        with pytest.raises(ConfigError):
            band_grid(zero_field, self.region, [60.0], gamma=1.0)

    def test_band_needs_stored_slice(self, zero_field):
        with pytest.raises(CoverageError):
            band_grid(zero_field, self.region, [60.25], gamma=0.5)

    def test_zero_solution(self, tmp_path, trivial_tables, flat_family, zero_field, direction):
        """Test u = u_tilde = 0 and F(q) = q_hat for the zero solution"""
        times = [30.0, 60.0, 90.0, 120.0]
        rep = reparametrization_from_reduced(trivial_tables)
        grid = band_grid(zero_field, self.region, times, gamma=0.5, q_min=rep.q[0] + 1.0)
        approx = build_utilde(rep, trivial_tables, solve_qhat(rep, 2.0, self.region, grid), self.region)
        report = compare(zero_field, approx, gamma=0.5)
        assert not report.sup_u.any()
        assert not report.sup_diff.any()
        assert np.isinf(report.fits["sup_u"].slope)
        assert report.band_halfwidth == pytest.approx(np.sqrt(times))

        path = tmp_path / "decay.csv"
        write_decay_csv(report, path)
        lines = path.read_text().splitlines()
        assert lines[0] == ",".join(DECAY_COLUMNS)
        assert len(lines) == len(times) + 1

        seeds = make_seeds(self.region, direction, dq=0.5, z_min=-8.0)
        sheet = build_sheet(flat_family, zero_field, self.region, seeds, times)
        t, sups, fit = reparam_defect(sheet, approx)
        assert list(t) == times
        assert np.max(sups) <= 1e-9

    def test_compare_exponent_range(self, trivial_tables, zero_field):
        rep = reparametrization_from_reduced(trivial_tables)
        grid = band_grid(zero_field, self.region, [60.0], gamma=0.5)
        approx = build_utilde(rep, trivial_tables, solve_qhat(rep, 2.0, self.region, grid), self.region)
        with pytest.raises(ConfigError):
            compare(zero_field, approx, gamma=0.0)

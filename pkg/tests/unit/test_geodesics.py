import numpy as np
import pytest

from app.core.errors import ConfigError, CoverageError, CrossingError, RootError
from app.core.worker_pool import WorkerPool
from app.geodesics.characteristics import DEFAULT_NULL_TOL, Bicharacteristic, init_on_H, trace
from app.geodesics.region import RegionSpec, Seed, make_seeds
from app.geodesics.sheet import (
    assemble_sheet,
    build_sheet,
    eikonal_residual,
    optical_bounds,
    sheet_from_rows,
)

DIAG_TIMES = (60.0, 100.0)


class TestRegion:
    def setup_method(self):
        """Set up test fixtures"""
        self.region = RegionSpec(kappa=0.5, T0=10.0, R=1.0, epsilon=0.02)

    @pytest.mark.parametrize("kappa", [0.0, 1.0, -0.2])
    def test_kappa_range(self, kappa):
        with pytest.raises(ConfigError):
            RegionSpec(kappa=kappa)

    def test_small_T0_rejected(self):
        with pytest.raises(ConfigError):
            RegionSpec(T0=0.5)

    def test_cone_and_membership(self):
        assert self.region.cone_radius(10.0) == pytest.approx(12.0)
        assert self.region.cone_radius(30.0) == pytest.approx(22.0)
        assert self.region.contains(30.0, 23.0)
        assert not self.region.contains(30.0, 21.0)
        assert not self.region.contains(5.0, 100.0)

    def test_seed_time_on_cone(self):
        assert self.region.seed_time(2.0) == pytest.approx(10.0)
        t = self.region.seed_time(-3.0)
        assert t + (-3.0) == pytest.approx(self.region.cone_radius(t))

    def test_seed_time_above_cone_tip(self):
        with pytest.raises(ConfigError):
            self.region.seed_time(2.5)

    def test_slow_time(self):
        assert self.region.s_of_t(10.0) == pytest.approx(0.0)
        assert self.region.t_of_s(self.region.s_of_t(250.0)) == pytest.approx(250.0)

    def test_slow_time_degenerate_without_amplitude(self):
        with pytest.raises(ConfigError):
            RegionSpec().t_of_s(0.1)


class TestSeeds:
    def test_ordered_seeds_on_cone(self, direction):
        region = RegionSpec()
        seeds = make_seeds(region, direction, dq=0.5, z_min=-4.0)
        assert len(seeds) == 13
        assert [s.z for s in seeds] == sorted((s.z for s in seeds), reverse=True)
        for s in seeds:
            assert s.r == pytest.approx(float(region.cone_radius(s.t)))
            assert s.point[3] == pytest.approx(s.r)

    def test_time_cutoff(self, direction):
        seeds = make_seeds(RegionSpec(), direction, dq=0.5, z_min=-40.0, t_max=30.0)
        assert seeds
        assert all(s.t <= 30.0 for s in seeds)

    def test_positive_spacing_required(self, direction):
        with pytest.raises(ConfigError):
            make_seeds(RegionSpec(), direction, dq=0.0)


class TestFlatCharacteristics:
    def setup_method(self):
        """Set up test fixtures"""
        self.region = RegionSpec(kappa=0.5, T0=10.0, R=1.0)

    def test_initial_covector_is_minus_dt_plus_dr(self, flat_family, zero_field, direction):
        seed = make_seeds(self.region, direction, dq=1.0, z_min=-5.0)[3]
        z, p = init_on_H(flat_family, zero_field, self.region, seed)
        assert z == seed.z
        assert p == pytest.approx([-1.0, 0.0, 0.0, 1.0], abs=1e-14)

    def test_seed_off_cone(self, flat_family, zero_field, direction):
        seed = Seed(z=0.0, t=20.0, direction=direction)
        with pytest.raises(RootError):
            init_on_H(flat_family, zero_field, self.region, seed)

    def test_trace_keeps_r_minus_t(self, flat_family, zero_field, direction):
        seed = make_seeds(self.region, direction, dq=1.0, z_min=-5.0)[4]
        curve = trace(flat_family, zero_field, self.region, seed, DIAG_TIMES)
        assert curve.t[0] == seed.t
        assert list(curve.t[1:]) == list(DIAG_TIMES)
        assert curve.r - curve.t == pytest.approx(np.full(curve.t.size, seed.z), abs=1e-9)
        assert curve.q_r == pytest.approx(np.ones(curve.t.size), abs=1e-12)
        assert curve.max_null_residual <= 1e-12

    def test_rows_match_columns(self, flat_family, zero_field, direction):
        seed = make_seeds(self.region, direction, dq=1.0, z_min=-5.0)[0]
        curve = trace(flat_family, zero_field, self.region, seed, DIAG_TIMES)
        rows = list(curve.rows())
        assert len(rows) == curve.t.size
        assert all(len(row) == 11 for row in rows)


class TestQuasilinearCharacteristics:
    def test_outgoing_shift(self, quasilinear_family, bump_field, direction):
        """Test characteristics inside the bump drift outward when c > 1"""
        region = RegionSpec(kappa=0.5, T0=10.0, R=1.0, epsilon=0.02)
        seed = Seed(z=0.5, t=region.seed_time(0.5), direction=direction)
        curve = trace(quasilinear_family, bump_field, region, seed, (100.0, 200.0))
        assert curve.max_null_residual <= DEFAULT_NULL_TOL
        assert curve.r[-1] - curve.t[-1] > seed.z + 0.01
        assert np.all(np.diff(curve.r - curve.t) > 0.0)


class TestOpticalSheet:
    def setup_method(self):
        """Set up test fixtures"""
        self.region = RegionSpec(kappa=0.5, T0=10.0, R=1.0)

    def _sheet(self, fam, fld, direction, stencil_dt=None):
        seeds = make_seeds(self.region, direction, dq=1.0, z_min=-20.0)
        pool = WorkerPool(max_workers=2, name="test")
        return build_sheet(fam, fld, self.region, seeds, DIAG_TIMES, pool=pool, stencil_dt=stencil_dt)

    def test_flat_sheet_is_r_minus_t(self, flat_family, zero_field, direction):
        sheet = self._sheet(flat_family, zero_field, direction)
        r = np.linspace(45.0, 70.0, 11)
        assert sheet.q_at(60.0, r) == pytest.approx(r - 60.0, abs=1e-9)
        assert sheet.q_at(60.0, 75.0) == pytest.approx(15.0)
        assert sheet.r_of_q(100.0, -7.5) == pytest.approx(92.5, abs=1e-9)

    def test_coverage(self, flat_family, zero_field, direction):
        sheet = self._sheet(flat_family, zero_field, direction)
        with pytest.raises(CoverageError):
            sheet.q_at(60.0, 30.0)
        with pytest.raises(CoverageError):
            sheet.r_of_q(60.0, -50.0)
        with pytest.raises(CoverageError):
            sheet.slice_at(70.0)

    def test_flat_optical_bounds(self, flat_family, zero_field, direction):
        bounds = optical_bounds(self._sheet(flat_family, zero_field, direction))
        assert [b["t"] for b in bounds] == list(DIAG_TIMES)
        for b in bounds:
            assert b["min_q_r"] == pytest.approx(1.0, abs=1e-12)
            assert b["sup_nu"] <= 1e-12
            assert b["sup_shift"] <= 1e-9

    def test_eikonal_residual(self, flat_family, zero_field, direction):
        sheet = self._sheet(flat_family, zero_field, direction, stencil_dt=0.5)
        for row in eikonal_residual(sheet, flat_family, zero_field):
            assert row["sup_residual"] <= 1e-8

    def test_eikonal_residual_needs_stencil(self, flat_family, zero_field, direction):
        sheet = self._sheet(flat_family, zero_field, direction)
        with pytest.raises(CoverageError):
            eikonal_residual(sheet, flat_family, zero_field)

    def test_rebuild_from_rows(self, flat_family, zero_field, direction):
        sheet = self._sheet(flat_family, zero_field, direction)
        rebuilt = sheet_from_rows(sheet.characteristic_rows(), self.region, DIAG_TIMES)
        r = np.linspace(50.0, 65.0, 7)
        assert rebuilt.q_at(60.0, r) == pytest.approx(sheet.q_at(60.0, r), abs=1e-14)
        assert rebuilt.max_null_residual() == sheet.max_null_residual()

    def test_crossing_detected(self, direction):
        def curve(z, r):
            seed = Seed(z=z, t=self.region.seed_time(z), direction=direction)
            return Bicharacteristic(
                seed=seed,
                z=z,
                p0=np.array([-1.0, 0.0, 0.0, 1.0]),
                sigma=np.zeros(1),
                t=np.array([60.0]),
                x=np.array([[0.0, 0.0, r]]),
                p=np.array([[-1.0, 0.0, 0.0, 1.0]]),
                null_residual=np.zeros(1),
            )

        with pytest.raises(CrossingError):
            assemble_sheet([curve(-1.0, 59.5), curve(0.0, 59.0)], self.region, [60.0])

    def test_single_curve_is_not_a_sheet(self, flat_family, zero_field, direction):
        seed = make_seeds(self.region, direction, dq=1.0, z_min=-5.0)[0]
        curve = trace(flat_family, zero_field, self.region, seed, [60.0])
        with pytest.raises(CoverageError):
            assemble_sheet([curve], self.region, [60.0])

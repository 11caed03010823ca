import numpy as np
import pytest

from app.core.errors import ArtifactError, ConfigError, OutOfSlabError, StabilityError
from app.metric.family import flat, general, isotropic
from app.wave.field import SolutionField
from app.wave.initial_data import InitialData, mollifier
from app.wave.oracle import dalembert_radial
from app.wave.snapshot import export_csv, read_snapshot, write_snapshot
from app.wave.solver import default_time_step, energy_drift, solve, time_reversal_defect


class TestInitialData:
    def test_mollifier(self):
        values = mollifier(np.array([0.0, 0.5, 1.0, -1.5]))
        assert values[0] == 1.0
        assert 0.0 < values[1] < 1.0
        assert values[2] == 0.0
        assert values[3] == 0.0

    def test_amplitude_limit(self):
        with pytest.raises(ConfigError):
            InitialData(epsilon=0.2)

    def test_support_radius_must_be_positive(self):
        with pytest.raises(ConfigError):
            InitialData(epsilon=0.01, R=0.0)

    def test_trivial_data(self):
        assert InitialData(epsilon=0.0).is_trivial
        assert InitialData(epsilon=0.05, u0_poly=(0.0,)).is_trivial
        assert not InitialData(epsilon=0.05).is_trivial

    def test_profiles_scale_with_epsilon(self):
        data = InitialData(epsilon=0.05, u1_poly=(2.0,))
        r = np.linspace(0.0, 1.5, 7)
        assert data.position(r) == pytest.approx(0.05 * mollifier(r))
        assert data.velocity(r) == pytest.approx(0.1 * mollifier(r))


class TestDalembert:
    def test_matches_data_at_time_zero(self):
        data = InitialData(epsilon=0.05, u0_poly=(1.0, 0.5))
        r = np.linspace(0.05, 1.5, 30)
        assert dalembert_radial(data, 0.0, r) == pytest.approx(data.position(r), abs=1e-15)

    def test_outgoing_shell_decays_like_one_over_r(self):
        data = InitialData(epsilon=0.05)
        t = 40.0
        r = np.linspace(t - 1.0, t + 1.0, 81)
        w = r * dalembert_radial(data, t, r)
        # incoming part phi(r + t) vanishes near the light cone
        expected = 0.5 * (r - t) * data.position(np.abs(r - t))
        assert w == pytest.approx(expected, abs=1e-15)


class TestSolver:
    def setup_method(self):
        """Set up test fixtures"""
        self.data = InitialData(epsilon=0.05)

    def _error(self, h: float, T: float = 10.0) -> float:
        fld = solve(flat(), self.data, T_max=T, h=h)
        r = fld.r_grid(fld.n_slices - 1)[1:]
        exact = dalembert_radial(self.data, fld.t_max, r)
        return float(np.max(np.abs(fld.slices[-1][1:] - exact)))

    def test_default_time_step(self):
        assert default_time_step(flat(), 0.1) == pytest.approx(0.05)
        assert default_time_step(isotropic([1.0, 1.0]), 0.1) == pytest.approx(0.05 / 1.2)

    def test_second_order_convergence(self):
        """Test halving h divides the flat-space error by about four"""
        ratio = self._error(0.05) / self._error(0.025)
        assert 3.5 <= ratio <= 4.5

    def test_flat_energy_conserved(self):
        fld = solve(flat(), self.data, T_max=20.0, h=0.05)
        assert fld.energy.shape[1] == 2
        assert energy_drift(fld) <= 1e-10

    def test_stored_times_cover_diagnostics(self):
        fld = solve(flat(), self.data, T_max=20.0, h=0.1, diag_times=(12.0,))
        assert fld.t_min == 0.0
        assert fld.t_max == pytest.approx(20.0)
        assert np.min(np.abs(fld.times - 12.0)) < fld.k
        assert np.all(np.diff(fld.times) > 0)

    def test_quasilinear_stays_in_validity(self, quasilinear_family):
        fld = solve(quasilinear_family, self.data, T_max=15.0, h=0.05)
        _, sups = fld.sup_history()
        assert np.all(sups < quasilinear_family.u_validity)
        assert fld.c_coeffs == (1.0, 1.0)

    def test_general_family_rejected(self):
        g1 = np.diag([0.0, 1.0, 1.0, 1.0])
        with pytest.raises(ConfigError):
            solve(general([g1]), self.data, T_max=1.0, h=0.1)

    def test_cfl_violation(self):
        with pytest.raises(ConfigError):
            solve(flat(), self.data, T_max=1.0, h=0.1, k=0.1)

    def test_data_outside_validity(self):
        with pytest.raises(StabilityError):
            solve(flat(), InitialData(epsilon=0.1, u0_poly=(3.0,)), T_max=1.0, h=0.1)

    def test_time_reversal(self):
        assert time_reversal_defect(flat(), self.data, T=5.0, h=0.05) < 1e-6


class TestSolutionField:
    def test_zero_field_samples_zero(self, zero_field):
        sample = zero_field.sample(30.0, np.array([0.0, 10.0, 30.5]))
        assert not np.any(sample.u)
        assert not np.any(sample.u_rr)

    def test_query_outside_slab(self, zero_field):
        with pytest.raises(OutOfSlabError):
            zero_field.sample(zero_field.t_max + 1.0, 1.0)
        with pytest.raises(OutOfSlabError):
            zero_field.sample(1.0, -0.5)

    def test_slice_times_must_increase(self):
        with pytest.raises(OutOfSlabError):
            SolutionField(h=0.1, k=0.05, times=[1.0, 0.5], slices=[np.zeros(3), np.zeros(3)], R=1.0)

    def test_node_values_are_exact(self):
        fld = solve(flat(), InitialData(epsilon=0.05), T_max=5.0, h=0.1)
        i = fld.n_slices - 1
        assert fld.sample(fld.times[i], 4.5).u == fld.slices[i][45]

    def test_interpolation_follows_null_lines(self, bump_field):
        """Test off-grid samples between slices match the closed form"""
        fld = bump_field.to_solution_field(0.05, np.arange(55.0, 66.0, 0.5))
        t, r = 60.37, 60.68
        exact = bump_field.sample(t, r)
        approx = fld.sample(t, r)
        assert approx.u == pytest.approx(exact.u, abs=2e-7)
        assert approx.u_r == pytest.approx(exact.u_r, abs=1e-5)

    def test_band_values(self, zero_field):
        r, u = zero_field.band_values(100, half_width=1.0)
        assert np.all(np.abs(r - zero_field.times[100]) <= 1.0)
        assert r.shape == u.shape


class TestSnapshot:
    def test_write_read(self, tmp_path):
        fld = solve(flat(), InitialData(epsilon=0.05), T_max=5.0, h=0.1)
        path = tmp_path / "field.wnsf"
        write_snapshot(fld, path)
        back = read_snapshot(path, R=1.0, epsilon=0.05)
        assert back.h == fld.h
        assert back.k == fld.k
        assert np.array_equal(back.times, fld.times)
        assert all(np.array_equal(a, b) for a, b in zip(back.slices, fld.slices, strict=True))

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "bad.wnsf"
        path.write_bytes(b"XXXX" + bytes(28))
        with pytest.raises(ArtifactError):
            read_snapshot(path, R=1.0)

    def test_truncated(self, tmp_path, zero_field):
        path = tmp_path / "field.wnsf"
        write_snapshot(zero_field, path)
        path.write_bytes(path.read_bytes()[:-8])
        with pytest.raises(ArtifactError):
            read_snapshot(path, R=1.0)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ArtifactError):
            read_snapshot(tmp_path / "absent.wnsf", R=1.0)

    def test_export_csv_stride(self, tmp_path, zero_field):
        path = tmp_path / "field.csv"
        export_csv(zero_field, path, r_stride=20)
        lines = path.read_text().splitlines()
        assert lines[0] == "t,r,u"
        expected = sum(len(s[::20]) for s in zero_field.slices)
        assert len(lines) == expected + 1

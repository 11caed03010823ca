import filecmp
import json
import shutil
from pathlib import Path

import pytest

from app.core.errors import CrossingError
from app.models.schemas import load_run_config
from app.pipeline import acceptance
from app.pipeline.runner import run_pipeline
from tests.integration.conftest import CONFIGS

pytestmark = pytest.mark.integration


def _report(out) -> dict:
    return json.loads((Path(out) / "report.json").read_text())


class TestFlatPipeline:
    def test_exit_code(self, flat_run):
        """Test zero field on Minkowski passes every hard check"""
        cfg, code = flat_run
        report = _report(cfg.run.out)
        assert code == 0, [c for c in report["checks"] if not c["passed"]]
        assert report["exit_code"] == 0
        assert report["error"] is None

    def test_artifacts(self, flat_run):
        cfg, _ = flat_run
        out = Path(cfg.run.out)
        for name in (
            "field.wnsf",
            "sheet.csv",
            "frames.csv",
            "scattering.csv",
            "reduced.csv",
            "approximation.csv",
            "decay_report.csv",
            "gauge.csv",
            "summary.md",
            "metrics.prom",
            "plots/checks.csv",
            "plots/chi_profiles.csv",
        ):
            assert (out / name).is_file(), name
        assert "summary.md" in _report(out)["artifacts"]

    def test_flat_checks_recorded(self, flat_run):
        cfg, _ = flat_run
        checks = {(c["stage"], c["name"]): c for c in _report(cfg.run.out)["checks"]}
        for key in (
            ("trace", "optical_shift"),
            ("frames", "chi_round_sphere"),
            ("extract", "trivial_data"),
            ("approx", "trivial_utilde"),
            ("compare", "trivial_difference"),
        ):
            assert checks[key]["passed"], key

    def test_frame_checks_are_hard(self, flat_run):
        """Test the Raychaudhuri and chi rows gate the exit code at the exact tolerance"""
        cfg, _ = flat_run
        checks = {(c["stage"], c["name"]): c for c in _report(cfg.run.out)["checks"]}
        for name in ("chi_round_sphere", "raychaudhuri_defect", "tr_chi_rotation"):
            row = checks[("frames", name)]
            assert row["hard"], name
            assert row["passed"], name
        assert checks[("frames", "raychaudhuri_defect")]["threshold"] == acceptance.EXACT_TOL

    def test_seed_column_documented(self, flat_run):
        cfg, _ = flat_run
        for name in ("frames.csv", "bicharacteristics.csv"):
            lines = (Path(cfg.run.out) / name).read_text().splitlines()
            assert lines[0].startswith("# z = ")
            assert lines[1].split(",")[0] == "z"

    def test_rerun_is_byte_identical(self, flat_run, tmp_path):
        """Test serial rerun reproduces every CSV of the parallel run"""
        cfg, _ = flat_run
        rerun = cfg.with_overrides(out=str(tmp_path / "serial"), workers=1)
        assert run_pipeline(rerun) == 0
        first, second = Path(cfg.run.out), Path(rerun.run.out)
        names = sorted(str(p.relative_to(first)) for p in first.rglob("*.csv"))
        assert names
        match, mismatch, errors = filecmp.cmpfiles(first, second, names, shallow=False)
        assert mismatch == [] and errors == []


class TestStageFailures:
    def test_missing_field(self, tmp_path):
        """Test a stage without its inputs fails with exit 3"""
        cfg = load_run_config(CONFIGS / "flat.ini").with_overrides(out=str(tmp_path))
        assert run_pipeline(cfg, ["trace"]) == 3
        report = _report(tmp_path)
        assert report["error"].startswith("[trace] ArtifactError")
        assert report["stages"] == ["trace"]

    def test_numerical_failure_attributed(self, flat_run, tmp_path, mocker):
        cfg, _ = flat_run
        out = tmp_path / "copy"
        shutil.copytree(cfg.run.out, out)
        mocker.patch("app.pipeline.stages.build_sheet", side_effect=CrossingError("seeds 3 and 4 crossed"))
        code = run_pipeline(cfg.with_overrides(out=str(out)), ["trace"])
        assert code == 3
        report = _report(out)
        assert report["error"].startswith("[trace] CrossingError")
        assert len(report["checks"]) > 0

    def test_failed_hard_check_exit_code(self, flat_run, tmp_path, mocker):
        cfg, _ = flat_run
        out = tmp_path / "copy"
        shutil.copytree(cfg.run.out, out)
        mocker.patch.object(acceptance, "REDUCED_AGREEMENT", -1.0)
        assert run_pipeline(cfg.with_overrides(out=str(out)), ["reduced"]) == 4
        assert "reduced/closed_form_vs_rk45" in _report(out)["error"]

    def test_failure_not_enforced(self, flat_run, tmp_path, mocker):
        cfg, _ = flat_run
        out = tmp_path / "copy"
        shutil.copytree(cfg.run.out, out)
        mocker.patch.object(acceptance, "REDUCED_AGREEMENT", -1.0)
        relaxed = cfg.model_copy(update={"run": cfg.run.model_copy(update={"enforce_acceptance": False, "out": str(out)})})
        assert run_pipeline(relaxed, ["reduced"]) == 0


@pytest.mark.slow
class TestQuasilinearPipeline:
    def test_smoke(self, tmp_path):
        cfg = load_run_config(CONFIGS / "smoke.ini").with_overrides(out=str(tmp_path))
        assert run_pipeline(cfg) == 0
        checks = {(c["stage"], c["name"]): c for c in _report(tmp_path)["checks"]}
        assert checks[("trace", "null_residual")]["passed"]
        assert checks[("reduced", "product_rk45")]["passed"]
        for key in (
            ("frames", "chi_round_sphere"),
            ("frames", "raychaudhuri_defect"),
            ("frames", "tr_chi_rotation"),
            ("extract", "A1_bound"),
        ):
            assert checks[key]["hard"], key

    def test_default(self, tmp_path):
        """Test the full quasilinear run meets every hard acceptance check"""
        cfg = load_run_config(CONFIGS / "default.ini").with_overrides(out=str(tmp_path))
        assert run_pipeline(cfg) == 0

from pathlib import Path

import pytest

from app.models.schemas import load_run_config
from app.pipeline.runner import run_pipeline

CONFIGS = Path(__file__).resolve().parents[2] / "configs"


@pytest.fixture(scope="session")
def flat_run(tmp_path_factory):
    """Full flat pipeline run shared by the integration tests: (config, exit code)"""
    out = tmp_path_factory.mktemp("flat")
    cfg = load_run_config(CONFIGS / "flat.ini").with_overrides(out=str(out), workers=2)
    return cfg, run_pipeline(cfg)

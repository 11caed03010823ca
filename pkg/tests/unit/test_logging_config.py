import json
import logging
import sys

import pytest

from app.core.errors import ConfigError
from config import logging_config
from config.logging_config import (
    HumanReadableFormatter,
    PerformanceFilter,
    RunContextFilter,
    StructuredFormatter,
    log_performance,
    setup_logging,
)
from config.settings import Settings


def _record(level=logging.INFO, **extra):
    record = logging.LogRecord("app.test", level, __file__, 10, "traced %d curves", (12,), None, func="trace")
    for key, value in extra.items():
        setattr(record, key, value)
    return record


class TestFormatters:
    def test_structured(self):
        """Test JSON log line"""
        entry = json.loads(StructuredFormatter().format(_record(run_id="abc", stage="trace", duration=3.5)))
        assert entry["message"] == "traced 12 curves"
        assert entry["run_id"] == "abc"
        assert entry["stage"] == "trace"
        assert entry["duration_ms"] == 3.5

    def test_structured_exception(self):
        try:
            raise ValueError("bad root")
        except ValueError:
            record = logging.LogRecord("app.test", logging.ERROR, __file__, 1, "failed", None, sys.exc_info(), func="trace")
        entry = json.loads(StructuredFormatter().format(record))
        assert entry["exception"]["type"] == "ValueError"

    def test_human_readable(self):
        line = HumanReadableFormatter().format(_record(stage="solve", duration=12.0))
        assert "traced 12 curves" in line
        assert "stage=solve" in line
        assert "duration=12.0ms" in line


class TestFilters:
    def test_run_context(self):
        context = RunContextFilter()
        context.set_context(run_id="r1", stage="frames")
        record = _record(stage="trace")
        assert context.filter(record)
        assert record.run_id == "r1"
        assert record.stage == "trace"
        context.clear_context()
        assert context.run_context == {}

    def test_performance(self):
        performance = PerformanceFilter()
        assert performance.filter(_record(duration=1.0))
        assert performance.filter(_record(level=logging.ERROR))
        assert not performance.filter(_record())


class TestSetupLogging:
    def setup_method(self):
        """Set up test fixtures"""
        self.root = logging.getLogger()
        self.saved = list(self.root.handlers)
        self.level = self.root.level

    def teardown_method(self):
        for handler in self.root.handlers:
            if handler not in self.saved:
                handler.close()
        self.root.handlers[:] = self.saved
        self.root.setLevel(self.level)
        logging_config.run_context_filter = None

    def test_files_and_context(self, tmp_path, mocker):
        mocker.patch.object(logging_config.settings, "LOG_JSON", True)
        setup_logging(tmp_path, level="debug")
        assert self.root.level == logging.DEBUG
        logging_config.set_run_context(run_id="xyz")
        log_performance(logging.getLogger("app.test"), "trace", 4.0)
        for handler in self.root.handlers:
            handler.flush()
        assert (tmp_path / "errors.log").exists()
        lines = (tmp_path / "performance.log").read_text().splitlines()
        assert json.loads(lines[-1])["run_id"] == "xyz"
        assert (tmp_path / "pipeline.json").exists()

    def test_without_json(self, tmp_path, mocker):
        mocker.patch.object(logging_config.settings, "LOG_JSON", False)
        setup_logging(tmp_path)
        assert not (tmp_path / "pipeline.json").exists()

    def test_library_loggers_untouched(self, tmp_path):
        names = ("matplotlib", "numba", "scipy")
        before = {name: logging.getLogger(name).level for name in names}
        setup_logging(tmp_path, level="debug")
        assert {name: logging.getLogger(name).level for name in names} == before


class TestSettings:
    def test_defaults(self, monkeypatch):
        monkeypatch.delenv("MAX_WORKERS", raising=False)
        monkeypatch.delenv("OUTPUT_DIR", raising=False)
        settings = Settings()
        assert settings.MAX_WORKERS == 4
        assert settings.OUTPUT_DIR == "runs/latest"
        settings.validate_required_settings()

    @pytest.mark.parametrize("name, value", [("LOG_LEVEL", "loud"), ("MAX_WORKERS", "0"), ("DEFAULT_SEED", "-1")])
    def test_invalid(self, monkeypatch, name, value):
        monkeypatch.setenv(name, value)
        with pytest.raises(ConfigError, match=name):
            Settings().validate_required_settings()

    def test_validation_cached(self, monkeypatch):
        settings = Settings()
        settings.validate_required_settings()
        settings.MAX_WORKERS = 0
        settings.validate_required_settings()

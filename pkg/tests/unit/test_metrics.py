from concurrent.futures import ThreadPoolExecutor
from unittest.mock import patch

import pytest

from app.core.errors import StabilityError
from app.core.metrics import MetricsCollector, metrics_collector, track_trace


class TestMetricsCollector:
    def setup_method(self):
        """Set up test fixtures"""
        self.metrics_collector = MetricsCollector()

    def test_initialization(self):
        """Test metrics collector initialization"""
        assert self.metrics_collector.logger is not None
        assert self.metrics_collector.registry is not None

    def test_init_counters(self):
        """Test gauge initialization"""
        assert self.metrics_collector.max_null_residual._value.get() == 0.0
        assert self.metrics_collector.max_frame_defect._value.get() == 0.0
        assert self.metrics_collector.memory_usage_bytes.labels(type="rss")._value.get() == 0
        assert self.metrics_collector.memory_usage_bytes.labels(type="vms")._value.get() == 0

    def test_record_stage(self):
        """Test stage recording"""
        self.metrics_collector.record_stage("trace", "ok", 1.5)
        self.metrics_collector.record_stage("trace", "ok", 0.5)

        assert self.metrics_collector.stage_runs_total.labels(stage="trace", status="ok")._value.get() == 2
        assert self.metrics_collector.stage_runs_total.labels(stage="trace", status="failed")._value.get() == 0

    def test_record_trace_keeps_maximum(self):
        """Test null residual gauge holds the running maximum"""
        self.metrics_collector.record_trace(0.1, 1e-10)
        self.metrics_collector.record_trace(0.1, 1e-12)

        assert self.metrics_collector.geodesics_traced_total._value.get() == 2
        assert self.metrics_collector.max_null_residual._value.get() == 1e-10

    def test_record_frame_defect(self):
        """Test frame defect recording"""
        self.metrics_collector.record_frame_defect(3e-9)
        self.metrics_collector.record_frame_defect(1e-9)
        assert self.metrics_collector.max_frame_defect._value.get() == 3e-9

    def test_frame_defect_maximum_under_threads(self):
        """Test concurrent records keep the largest defect"""
        values = [1e-9 * (i % 97) for i in range(2000)]
        with ThreadPoolExecutor(max_workers=8) as executor:
            list(executor.map(self.metrics_collector.record_frame_defect, values))
        assert self.metrics_collector.max_frame_defect._value.get() == max(values)

    def test_record_fit(self):
        """Test fit recording"""
        self.metrics_collector.record_fit("A1", "ok")
        self.metrics_collector.record_fit("A1", "failed")
        assert self.metrics_collector.fits_total.labels(quantity="A1", status="ok")._value.get() == 1
        assert self.metrics_collector.fits_total.labels(quantity="A1", status="failed")._value.get() == 1

    def test_record_error(self):
        """Test error recording"""
        self.metrics_collector.record_error("CrossingError", "app.geodesics.sheet")
        assert (
            self.metrics_collector.errors_total.labels(
                error_type="CrossingError", module="app.geodesics.sheet"
            )._value.get()
            == 1
        )

    @patch("app.core.metrics.psutil")
    def test_update_system_metrics(self, mock_psutil):
        """Test system metrics update"""
        mock_psutil.Process.return_value.memory_info.return_value.rss = 1024
        mock_psutil.Process.return_value.memory_info.return_value.vms = 2048

        self.metrics_collector.update_system_metrics()

        assert self.metrics_collector.memory_usage_bytes.labels(type="rss")._value.get() == 1024
        assert self.metrics_collector.memory_usage_bytes.labels(type="vms")._value.get() == 2048

    def test_get_metrics(self):
        """Test metrics export"""
        self.metrics_collector.record_stage("solve", "ok", 2.0)
        output = self.metrics_collector.get_metrics()
        assert isinstance(output, bytes)
        assert b"stage_runs_total" in output

    def test_get_summary(self):
        """Test scalar summary"""
        self.metrics_collector.record_trace(0.2, 5e-11)
        summary = self.metrics_collector.get_summary()
        assert summary == {"geodesics_traced": 1, "max_null_residual": 5e-11, "max_frame_defect": 0.0}

    def test_write_textfile(self, tmp_path):
        """Test textfile export"""
        path = tmp_path / "metrics.prom"
        self.metrics_collector.write_textfile(path)
        assert "max_null_residual" in path.read_text()

    def test_write_textfile_error_is_logged(self, tmp_path):
        """Test unwritable target does not raise"""
        with patch.object(self.metrics_collector.logger, "error") as mock_error:
            self.metrics_collector.write_textfile(tmp_path / "missing" / "metrics.prom")
        mock_error.assert_called_once()

    def test_reset(self):
        """Test reset gives a fresh registry"""
        self.metrics_collector.record_trace(0.1, 1.0)
        old_registry = self.metrics_collector.registry
        self.metrics_collector.reset()
        assert self.metrics_collector.registry is not old_registry
        assert self.metrics_collector.geodesics_traced_total._value.get() == 0


class TestTrackTrace:
    def setup_method(self):
        """Set up test fixtures"""
        metrics_collector.reset()

    def test_success(self):
        """Test decorator records traced curves"""

        class Curve:
            max_null_residual = 2e-12

        @track_trace
        def trace():
            return Curve()

        trace()
        assert metrics_collector.geodesics_traced_total._value.get() == 1
        assert metrics_collector.max_null_residual._value.get() == 2e-12

    def test_error(self):
        """Test decorator records errors and re-raises"""

        @track_trace
        def trace():
            raise StabilityError("diverged")

        with pytest.raises(StabilityError):
            trace()
        assert metrics_collector.geodesics_traced_total._value.get() == 0
        assert (
            metrics_collector.errors_total.labels(error_type="StabilityError", module=__name__)._value.get()
            == 1
        )

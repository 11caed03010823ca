import functools
import threading
import time
from pathlib import Path
from typing import Any

import psutil
from prometheus_client import (
    CollectorRegistry,
    Counter,
    Gauge,
    Histogram,
    generate_latest,
    write_to_textfile,
)

from config.logging_config import get_logger

logger = get_logger(__name__)


class MetricsCollector:
    """Prometheus metrics collector for pipeline runs"""

    def __init__(self):
        self.logger = get_logger(__name__)
        self.registry = CollectorRegistry()
        self._lock = threading.Lock()

        # Stage metrics
        self.stage_runs_total = Counter(
            "stage_runs_total",
            "Total number of pipeline stage executions",
            ["stage", "status"],
            registry=self.registry,
        )

        self.stage_duration_seconds = Histogram(
            "stage_duration_seconds",
            "Pipeline stage duration in seconds",
            ["stage"],
            buckets=[0.1, 0.5, 1.0, 5.0, 30.0, 120.0, 600.0],
            registry=self.registry,
        )

        # Characteristic tracing
        self.geodesics_traced_total = Counter(
            "geodesics_traced_total",
            "Total number of traced bicharacteristics",
            registry=self.registry,
        )

        self.trace_duration_seconds = Histogram(
            "trace_duration_seconds",
            "Single bicharacteristic integration time in seconds",
            buckets=[0.01, 0.05, 0.1, 0.5, 1.0, 5.0],
            registry=self.registry,
        )

        self.max_null_residual = Gauge(
            "max_null_residual",
            "Largest |g(p,p)| observed along traced characteristics",
            registry=self.registry,
        )

        self.max_frame_defect = Gauge(
            "max_frame_defect",
            "Largest null-frame inner-product defect",
            registry=self.registry,
        )

        # Fits
        self.fits_total = Counter(
            "fits_total",
            "Total number of limit/decay fits",
            ["quantity", "status"],
            registry=self.registry,
        )

        # Errors and exceptions
        self.errors_total = Counter(
            "errors_total",
            "Total number of errors",
            ["error_type", "module"],
            registry=self.registry,
        )

        # Performance metrics
        self.memory_usage_bytes = Gauge(
            "memory_usage_bytes",
            "Memory usage in bytes",
            ["type"],
            registry=self.registry,
        )

        self._init_counters()

    def _init_counters(self):
        """Initialize initial gauge values"""
        self.max_null_residual.set(0.0)
        self.max_frame_defect.set(0.0)
        self.memory_usage_bytes.labels(type="rss").set(0)
        self.memory_usage_bytes.labels(type="vms").set(0)

    def record_stage(self, stage: str, status: str, duration: float):
        """Record stage execution metric"""
        self.stage_runs_total.labels(stage=stage, status=status).inc()
        self.stage_duration_seconds.labels(stage=stage).observe(duration)

    def record_trace(self, duration: float, null_residual: float):
        """Record one traced characteristic"""
        self.geodesics_traced_total.inc()
        self.trace_duration_seconds.observe(duration)
        self._raise_gauge(self.max_null_residual, null_residual)

    def record_frame_defect(self, defect: float):
        """Record frame defect of one transported bundle"""
        self._raise_gauge(self.max_frame_defect, defect)

    def record_fit(self, quantity: str, status: str):
        """Record fit metric"""
        self.fits_total.labels(quantity=quantity, status=status).inc()

    def record_error(self, error_type: str, module: str):
        """Record error metric"""
        self.errors_total.labels(error_type=error_type, module=module).inc()

    def update_system_metrics(self):
        """Update memory gauges from the current process"""
        memory = psutil.Process().memory_info()
        self.memory_usage_bytes.labels(type="rss").set(memory.rss)
        self.memory_usage_bytes.labels(type="vms").set(memory.vms)

    def _raise_gauge(self, gauge: Gauge, value: float):
        # Gauges here hold running maxima
        with self._lock:
            if value > gauge._value.get():
                gauge.set(value)

    def get_metrics(self) -> bytes:
        """Get metrics in Prometheus format"""
        return generate_latest(self.registry)

    def get_summary(self) -> dict[str, Any]:
        """Scalar view of the run-wide gauges for the report"""
        return {
            "geodesics_traced": self.geodesics_traced_total._value.get(),
            "max_null_residual": self.max_null_residual._value.get(),
            "max_frame_defect": self.max_frame_defect._value.get(),
        }

    def write_textfile(self, path: str | Path):
        """Dump the registry in the textfile-collector format"""
        try:
            self.update_system_metrics()
            write_to_textfile(str(path), self.registry)
            self.logger.info(f"Metrics written to {path}")
        except OSError as e:
            self.logger.error(f"Failed to write metrics to {path}: {e}")

    def reset(self):
        """Fresh registry (one per pipeline run)"""
        self.__init__()


# Global metrics collector instance
metrics_collector = MetricsCollector()


def track_trace(func):
    """Decorator for tracking bicharacteristic integrations"""

    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        """Wrapper function for trace tracking."""
        start_time = time.time()
        try:
            result = func(*args, **kwargs)
            residual = getattr(result, "max_null_residual", 0.0)
            metrics_collector.record_trace(time.time() - start_time, residual)
            return result
        except Exception as e:
            metrics_collector.record_error(type(e).__name__, func.__module__)
            raise

    return wrapper

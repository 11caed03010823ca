import time
from collections.abc import Callable
from functools import wraps

from app.core.errors import LabError, StageError
from app.core.metrics import metrics_collector
from config.logging_config import get_logger, log_error, log_stage, set_run_context

logger = get_logger(__name__)


def with_stage_handling(stage: str):
    """Decorator for standard stage error handling.

    Laboratory errors are wrapped in StageError with the stage name and keep
    their exit code; anything else becomes a StageError with exit code 3.
    """

    def decorator(func: Callable) -> Callable:
        @wraps(func)
        def wrapper(*args, **kwargs):
            """Wrapper for error handling."""
            set_run_context(stage=stage)
            start = time.perf_counter()
            try:
                result = func(*args, **kwargs)
            except StageError:
                raise  # Already attributed
            except LabError as e:
                duration = time.perf_counter() - start
                metrics_collector.record_stage(stage, "failed", duration)
                metrics_collector.record_error(type(e).__name__, func.__module__)
                log_error(logger, f"Stage {stage} failed", e, stage=stage)
                raise StageError(stage, e) from e
            except Exception as e:
                duration = time.perf_counter() - start
                metrics_collector.record_stage(stage, "crashed", duration)
                metrics_collector.record_error(type(e).__name__, func.__module__)
                log_error(logger, f"Unexpected error in {stage}", e, stage=stage)
                raise StageError(stage, e) from e

            duration = time.perf_counter() - start
            metrics_collector.record_stage(stage, "ok", duration)
            log_stage(logger, stage, "ok", duration * 1000.0)
            return result

        return wrapper

    return decorator

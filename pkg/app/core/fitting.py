"""Least-squares slope fits shared by the diagnostics.

Decay exponents are fitted in log-log, growth rates in log-linear and
convergence orders in log-log of error against step size.
"""

from dataclasses import dataclass

import numpy as np

from app.core.errors import FitError
from app.core.metrics import metrics_collector
from config.logging_config import get_logger, log_fit

logger = get_logger(__name__)

_TINY = 1e-300


@dataclass(frozen=True)
class SlopeFit:
    """Result of a straight-line fit in transformed coordinates"""

    slope: float
    intercept: float
    residual: float
    n_points: int


def _line_fit(x: np.ndarray, y: np.ndarray, quantity: str) -> SlopeFit:
    if x.size < 2:
        metrics_collector.record_fit(quantity, "failed")
        raise FitError(f"{quantity}: need at least 2 points, got {x.size}")
    coeffs, residuals, *_ = np.polyfit(x, y, 1, full=True)
    rms = float(np.sqrt(residuals[0] / x.size)) if residuals.size else 0.0
    metrics_collector.record_fit(quantity, "ok")
    return SlopeFit(float(coeffs[0]), float(coeffs[1]), rms, int(x.size))


def decay_exponent(t, values, quantity: str = "decay", t_min: float | None = None) -> SlopeFit:
    """Fit |values| ~ C t^(-p); returns p as ``slope``.

    Exact zeros are skipped. A sequence that is zero everywhere has no decay
    to measure and yields slope = inf.
    """
    t = np.asarray(t, dtype=float)
    v = np.abs(np.asarray(values, dtype=float))
    mask = v > _TINY
    if t_min is not None:
        mask &= t >= t_min
    if not mask.any():
        return SlopeFit(float("inf"), float("-inf"), 0.0, 0)
    fit = _line_fit(np.log(t[mask]), np.log(v[mask]), quantity)
    result = SlopeFit(-fit.slope, fit.intercept, fit.residual, fit.n_points)
    log_fit(logger, quantity, float(np.exp(result.intercept)), result.slope, result.residual)
    return result


def growth_rate(s, values, quantity: str = "growth") -> SlopeFit:
    """Fit |values| ~ C exp(rate s); returns rate as ``slope``."""
    s = np.asarray(s, dtype=float)
    v = np.abs(np.asarray(values, dtype=float))
    mask = v > _TINY
    if not mask.any():
        return SlopeFit(0.0, float("-inf"), 0.0, 0)
    fit = _line_fit(s[mask], np.log(v[mask]), quantity)
    log_fit(logger, quantity, float(np.exp(fit.intercept)), fit.slope, fit.residual)
    return fit


def convergence_order(steps, errors, quantity: str = "convergence") -> SlopeFit:
    """Observed order p of errors ~ C h^p."""
    return _line_fit(
        np.log(np.asarray(steps, dtype=float)),
        np.log(np.maximum(np.asarray(errors, dtype=float), _TINY)),
        quantity,
    )

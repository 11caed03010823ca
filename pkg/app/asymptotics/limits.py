"""Limits of slowly converging sequences f(t) -> f_inf.

The model is f_inf + c t^-gamma. For fixed gamma the model is linear in
(f_inf, c), so gamma is found by a bounded scalar search on the projected
residual. A second term c2 t^-2gamma is added only when the single-term fit
leaves a residual above three times the noise floor.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from app.core.errors import FitError
from app.core.metrics import metrics_collector
from config.logging_config import get_logger, log_fit

logger = get_logger(__name__)

GAMMA_BOUNDS = (0.05, 5.0)
MIN_GAMMA = 0.2
MIN_SAMPLES = 4
MIN_SPAN = 8.0
MIN_SAMPLES_TWO_TERM = 6
NOISE_FLOOR = 1e-13
# a fit whose samples vary less than this (relative) is treated as converged
CONVERGED_TOL = 1e-3


@dataclass(frozen=True)
class LimitFit:
    """Fitted limit with its error estimate"""

    limit: float
    gamma: float
    amplitude: float
    error: float
    residual: float
    n_points: int
    two_term: bool = False


def _design(x: np.ndarray, gamma: float, terms: int) -> np.ndarray:
    cols = [np.ones_like(x)] + [x ** (-k * gamma) for k in range(1, terms + 1)]
    return np.column_stack(cols)


def _project(x: np.ndarray, f: np.ndarray, gamma: float, terms: int) -> tuple[np.ndarray, float]:
    coeffs, *_ = np.linalg.lstsq(_design(x, gamma, terms), f, rcond=None)
    resid = f - _design(x, gamma, terms) @ coeffs
    return coeffs, float(np.sqrt(np.mean(resid**2)))


def _best_gamma(x: np.ndarray, f: np.ndarray, terms: int) -> tuple[float, np.ndarray, float]:
    result = minimize_scalar(
        lambda g: _project(x, f, g, terms)[1],
        bounds=GAMMA_BOUNDS,
        method="bounded",
        options={"xatol": 1e-10},
    )
    gamma = float(result.x)
    coeffs, rms = _project(x, f, gamma, terms)
    return gamma, coeffs, rms


def fit_limit(t, f, quantity: str = "limit") -> LimitFit:
    """Fit f(t) = f_inf + c t^-gamma.

    The error estimate is |f_inf(all points) - f_inf(last half)|, the last
    half refitted at the same gamma. Raises FitError when gamma <= 0.2 on a
    sequence that is visibly not converged.
    """
    t = np.asarray(t, dtype=float)
    f = np.asarray(f, dtype=float)
    if t.size < MIN_SAMPLES or t.size != f.size:
        metrics_collector.record_fit(quantity, "failed")
        raise FitError(f"{quantity}: need at least {MIN_SAMPLES} samples, got {t.size}")
    if t.min() <= 0.0 or t.max() / t.min() < MIN_SPAN:
        metrics_collector.record_fit(quantity, "failed")
        raise FitError(f"{quantity}: samples must span a factor >= {MIN_SPAN:g} in t")
    if not np.all(np.isfinite(f)):
        metrics_collector.record_fit(quantity, "failed")
        raise FitError(f"{quantity}: non-finite samples")

    scale = max(1.0, float(np.max(np.abs(f))))
    if np.ptp(f) <= NOISE_FLOOR * scale:
        metrics_collector.record_fit(quantity, "ok")
        return LimitFit(float(f[-1]), math.inf, 0.0, 0.0, 0.0, int(t.size))

    x = t / t[0]
    gamma, coeffs, rms = _best_gamma(x, f, 1)
    two_term = False
    single_limit = float(coeffs[0])
    if rms > 3.0 * NOISE_FLOOR * scale and t.size >= MIN_SAMPLES_TWO_TERM:
        gamma2, coeffs2, rms2 = _best_gamma(x, f, 2)
        if rms2 < rms:
            gamma, coeffs, rms, two_term = gamma2, coeffs2, rms2, True

    half = t.size // 2
    terms = 2 if two_term and t.size - half >= 3 else 1
    tail, _ = _project(x[half:], f[half:], gamma, terms)
    error = abs(float(coeffs[0]) - float(tail[0]))
    if two_term:
        error = max(error, abs(float(coeffs[0]) - single_limit))

    if gamma <= MIN_GAMMA and np.ptp(f) > CONVERGED_TOL * scale:
        metrics_collector.record_fit(quantity, "failed")
        raise FitError(f"{quantity}: fitted gamma {gamma:.3g} <= {MIN_GAMMA}; no convergence")

    metrics_collector.record_fit(quantity, "ok")
    fit = LimitFit(
        limit=float(coeffs[0]),
        gamma=gamma,
        amplitude=float(coeffs[1]) * float(t[0]) ** gamma,
        error=error,
        residual=rms,
        n_points=int(t.size),
        two_term=two_term,
    )
    log_fit(logger, quantity, fit.limit, fit.gamma, fit.error)
    return fit

"""Comparison models for the slope V = U_q of an asymptotic profile.

- geometric_qwe: 2 d_s d_q U = G U d_q^2 U, i.e. 2 d_s V = G U d_q V with
  U = -int_q^inf V. V is constant along dq/ds = -G U / 2 and the
  characteristic Jacobian is exp(-G V s / 2) > 0, so solutions are global.
- burgers: 2 d_s V = V d_q V; characteristics dq/ds = -V / 2 cross at
  s* = 2 / max d_q V.
- riccati: d_s V = V^2 pointwise; V blows up at s* = 1 / max V.
"""

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.integrate import cumulative_trapezoid, solve_ivp

from app.core.errors import BlowupDetected, ConfigError, StabilityError
from app.core.fitting import SlopeFit, growth_rate
from config.logging_config import get_logger

logger = get_logger(__name__)

# relative disagreement allowed between the closed-form and the evolved blowup time
BLOWUP_AGREEMENT = 0.05


class ComparisonModel(Enum):
    """Hormander-type comparison models"""

    GEOMETRIC_QWE = "geometric_qwe"
    BURGERS = "burgers"
    RICCATI = "riccati"


@dataclass(frozen=True)
class HormanderResult:
    """Evolved profile: characteristic positions and slopes at the output times"""

    model: ComparisonModel
    s: np.ndarray
    q: np.ndarray
    values: np.ndarray
    max_slope: np.ndarray
    s_star: float = math.inf
    growth: SlopeFit | None = None

    @property
    def blew_up(self) -> bool:
        return math.isfinite(self.s_star)


def riccati_blowup_time(values) -> float:
    """1 / max V(0) over positive values; inf if V(0) <= 0 everywhere"""
    top = float(np.max(values))
    return 1.0 / top if top > 0.0 else math.inf


def burgers_blowup_time(q, values) -> float:
    """Characteristic-crossing time 2 / max d_q V(0); inf without positive slope"""
    slope = float(np.max(np.gradient(np.asarray(values, dtype=float), np.asarray(q, dtype=float))))
    return 2.0 / slope if slope > 0.0 else math.inf


def _d_q(v: np.ndarray, dq: float, periodic: bool) -> np.ndarray:
    # fourth-order centered first derivative
    if periodic:
        ext = np.concatenate((v[-2:], v, v[:2]))
    else:
        ext = np.concatenate((np.zeros(2), v, np.zeros(2)))
    return (ext[:-4] - 8.0 * ext[1:-3] + 8.0 * ext[3:-1] - ext[4:]) / (12.0 * dq)


def burgers_fd_blowup(
    q,
    values,
    periodic: bool = True,
    cfl: float = 0.4,
    slope_factor: float = 10.0,
    s_limit: float = 1e4,
) -> float:
    """Blowup time of 2 d_s V = V d_q V from a finite-difference run.

    Evolves d_s V = d_q(V^2 / 4) with RK4 until the largest slope has grown
    by ``slope_factor``, then extrapolates the reciprocal slope, which is
    linear in s along the steepest characteristic, to zero.
    """
    q = np.asarray(q, dtype=float)
    v = np.asarray(values, dtype=float).copy()
    dq = float(q[1] - q[0])

    def rhs(w):
        return _d_q(0.25 * w * w, dq, periodic)

    s = 0.0
    slope0 = float(np.max(_d_q(v, dq, periodic)))
    if slope0 <= 0.0:
        return math.inf
    history_s, history_inv = [0.0], [1.0 / slope0]
    while s < s_limit:
        speed = max(0.5 * float(np.max(np.abs(v))), 1e-12)
        ds = cfl * dq / speed
        k1 = rhs(v)
        k2 = rhs(v + 0.5 * ds * k1)
        k3 = rhs(v + 0.5 * ds * k2)
        k4 = rhs(v + ds * k3)
        v = v + ds * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0
        s += ds
        if not np.all(np.isfinite(v)):
            raise StabilityError(f"burgers finite-difference run diverged at s={s:.4g}")
        slope = float(np.max(_d_q(v, dq, periodic)))
        history_s.append(s)
        history_inv.append(1.0 / slope)
        if slope >= slope_factor * slope0:
            break
    else:
        return math.inf
    s_arr = np.asarray(history_s)
    inv = np.asarray(history_inv)
    tail = s_arr >= 0.5 * s_arr[-1]
    a, b = np.polyfit(s_arr[tail], inv[tail], 1)
    return float(-b / a)


def _output_times(s_end: float, n_out: int) -> np.ndarray:
    return np.linspace(0.0, s_end, n_out)


def _geometric_qwe(q0: np.ndarray, v0: np.ndarray, G: float, s_out: np.ndarray):
    def potential(s: float) -> np.ndarray:
        density = v0 * np.exp(-0.5 * G * v0 * s)
        # U(q0) = -int_{q0}^inf V J dq0, data vanishes beyond the grid
        tail = cumulative_trapezoid(density[::-1], -q0[::-1], initial=0.0)[::-1]
        return -tail

    def rhs(s, y):
        return -0.5 * G * potential(s)

    sol = solve_ivp(rhs, (0.0, s_out[-1]), q0, method="RK45", rtol=1e-10, atol=1e-12, t_eval=s_out)
    if sol.status < 0:
        raise StabilityError(f"geometric_qwe characteristics: {sol.message}")
    positions = sol.y.T
    slope0 = np.gradient(v0, q0)
    jac = np.exp(-0.5 * G * np.outer(s_out, v0))
    max_slope = np.max(np.abs(slope0[None, :] / jac), axis=1)
    return positions, np.tile(v0, (s_out.size, 1)), max_slope


def hormander_step(
    q,
    U_q0,
    G: float,
    model: ComparisonModel | str,
    s_end: float,
    n_out: int = 101,
    periodic: bool = False,
) -> HormanderResult:
    """Evolve the slope profile U_q(0, q) under ``model`` up to ``s_end``.

    Raises BlowupDetected (with the closed-form s*) when the Burgers or
    Riccati model blows up before ``s_end``; for Burgers the finite-difference
    estimate must agree with the closed form.
    """
    model = ComparisonModel(model)
    q = np.asarray(q, dtype=float)
    v0 = np.asarray(U_q0, dtype=float)
    if q.shape != v0.shape or q.size < 5 or np.any(np.diff(q) <= 0.0):
        raise ConfigError("profile needs at least 5 increasing q nodes")
    s_out = _output_times(s_end, n_out)

    if model is ComparisonModel.RICCATI:
        s_star = riccati_blowup_time(v0)
        if s_star <= s_end:
            raise BlowupDetected(model.value, s_star)
        values = v0[None, :] / (1.0 - np.outer(s_out, v0))
        positions = np.tile(q, (s_out.size, 1))
        max_slope = np.max(np.abs(np.gradient(values, q, axis=1)), axis=1)
    elif model is ComparisonModel.BURGERS:
        s_star = burgers_blowup_time(q, v0)
        if s_star <= s_end:
            s_fd = burgers_fd_blowup(q, v0, periodic=periodic)
            if abs(s_fd - s_star) > BLOWUP_AGREEMENT * s_star:
                raise StabilityError(
                    f"burgers blowup: closed form s*={s_star:.6g}, finite differences {s_fd:.6g}"
                )
            raise BlowupDetected(
                model.value, s_star, f"burgers blowup at s*={s_star:.6g} (finite differences {s_fd:.6g})"
            )
        positions = q[None, :] - 0.5 * np.outer(s_out, v0)
        values = np.tile(v0, (s_out.size, 1))
        slope0 = np.gradient(v0, q)
        max_slope = np.max(np.abs(slope0[None, :] / (1.0 - 0.5 * np.outer(s_out, slope0))), axis=1)
    else:
        positions, values, max_slope = _geometric_qwe(q, v0, G, s_out)

    growth = growth_rate(s_out, max_slope, quantity=f"{model.value}_slope")
    logger.debug(f"{model.value}: evolved to s={s_end:g}, slope growth rate {growth.slope:.4g}")
    return HormanderResult(model, s_out, positions, values, max_slope, math.inf, growth)

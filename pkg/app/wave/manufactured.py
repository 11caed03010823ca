"""Closed-form radial fields for exercising the geometry stages.

A manufactured field is any smooth expression in (t, r); it is not a solution
of the wave equation. Derivatives are exact (sympy), evaluation is numpy.
"""

import math

import numpy as np
import sympy as sp

from app.core.errors import OutOfSlabError
from app.wave.field import FieldSample, SolutionField

T, R_SYM = sp.symbols("t r", real=True)


def bump_expr(x: sp.Expr, width: float) -> sp.Expr:
    """Symbolic mollifier exp(1 - 1/(1 - (x/width)^2)) supported on |x| < width"""
    y = x / width
    return sp.Piecewise((sp.exp(1 - 1 / (1 - y**2)), y**2 < 1), (0, True))


def outgoing_bump(epsilon: float, R: float = 1.0) -> sp.Expr:
    """eps * chi(r - t) / r, the model outgoing profile"""
    return epsilon * bump_expr(R_SYM - T, R) / R_SYM


class ManufacturedField:
    """Radial field u(t, r) given by a sympy expression in ``t`` and ``r``."""

    def __init__(
        self,
        expr: sp.Expr,
        epsilon: float,
        R: float = 1.0,
        t_min: float | None = None,
        t_max: float = math.inf,
        c_coeffs: tuple[float, ...] = (1.0,),
    ):
        self.expr = sp.sympify(expr)
        self.epsilon = float(epsilon)
        self.R = float(R)
        self._t_min = 2.0 * self.R if t_min is None else float(t_min)
        self._t_max = float(t_max)
        self.c_coeffs = tuple(c_coeffs)
        derivatives = {
            "u": self.expr,
            "u_t": sp.diff(self.expr, T),
            "u_r": sp.diff(self.expr, R_SYM),
            "u_tt": sp.diff(self.expr, T, 2),
            "u_tr": sp.diff(self.expr, T, R_SYM),
            "u_rr": sp.diff(self.expr, R_SYM, 2),
        }
        self._funcs = {
            name: sp.lambdify((T, R_SYM), d, modules="numpy") for name, d in derivatives.items()
        }

    @property
    def t_min(self) -> float:
        return self._t_min

    @property
    def t_max(self) -> float:
        return self._t_max

    def wave_speed(self, u):
        """c(u) carried for consistency with evolved fields"""
        return np.polynomial.polynomial.polyval(u, self.c_coeffs)

    def _eval(self, name: str, t: float, r: np.ndarray) -> np.ndarray:
        with np.errstate(all="ignore"):
            values = np.broadcast_to(self._funcs[name](t, r), r.shape).astype(float)
        return np.nan_to_num(values, nan=0.0, posinf=0.0, neginf=0.0)

    def sample(self, t: float, r) -> FieldSample:
        """Exact u and derivatives; zero for r >= t + R"""
        t = float(t)
        if t < self._t_min or t > self._t_max:
            raise OutOfSlabError(f"t={t:.6g} outside [{self._t_min:.6g}, {self._t_max:.6g}]")
        scalar = np.ndim(r) == 0
        r = np.atleast_1d(np.asarray(r, dtype=float))
        if np.any(r < 0.0):
            raise OutOfSlabError("negative radius")
        live = r < t + self.R
        values = {}
        for name in self._funcs:
            v = np.zeros_like(r)
            if live.any():
                v[live] = self._eval(name, t, r[live])
            values[name] = v
        if scalar:
            return FieldSample(t, float(r[0]), **{n: float(v[0]) for n, v in values.items()})
        return FieldSample(t, r, **values)

    def to_solution_field(self, h: float, times) -> SolutionField:
        """Grid samples on r_j = j h at the given times, as an evolved field would store them"""
        times = np.asarray(sorted(times), dtype=float)
        slices = []
        for t in times:
            n = int(math.ceil((t + self.R) / h)) + 10
            slices.append(self.sample(t, h * np.arange(n + 1)).u)
        k = float(np.min(np.diff(times))) if times.size > 1 else h
        return SolutionField(
            h=h, k=k, times=times, slices=slices, R=self.R, epsilon=self.epsilon,
            c_coeffs=self.c_coeffs,
        )


def manufactured_field(expr: sp.Expr, epsilon: float, R: float = 1.0, **kwargs) -> ManufacturedField:
    """Field with exact closed-form derivatives of ``expr``"""
    return ManufacturedField(expr, epsilon, R, **kwargs)

"""F(q) = 2R - int_{2R}^q 2 / A1(p) dp, its inverse F_hat and A_hat = A(F_hat)."""

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import CubicHermiteSpline, PchipInterpolator

from app.core.errors import CoverageError, DomainError
from app.reduced.solution import ReducedSolution
from config.logging_config import get_logger

logger = get_logger(__name__)

REPARAM_COLUMNS = ("q", "F", "A1", "Ahat")
NEWTON_STEPS = 4


@dataclass(frozen=True, eq=False)
class Reparametrization:
    """Tabulated F with Hermite interpolation and linear continuation past the last node.

    With ``reduced`` set, A1 = -2 beyond R and F(q) = q there exactly.
    """

    q: np.ndarray
    F: np.ndarray
    F_q: np.ndarray
    R: float
    reduced: ReducedSolution | None = None

    @property
    def exterior_identity(self) -> bool:
        return self.reduced is not None

    @cached_property
    def _spline(self) -> CubicHermiteSpline:
        return CubicHermiteSpline(self.q, self.F, self.F_q)

    @cached_property
    def _inverse_guess(self) -> CubicHermiteSpline:
        return CubicHermiteSpline(self.F, self.q, 1.0 / self.F_q)

    def _check(self, q: np.ndarray):
        if np.any(q < self.q[0] - 1e-12):
            raise CoverageError(f"q={float(q.min()):.6g} below the reparametrization table {self.q[0]:.6g}")

    def F_of(self, q):
        scalar = np.ndim(q) == 0
        q = np.atleast_1d(np.asarray(q, dtype=float))
        self._check(q)
        inside = self._spline(np.clip(q, self.q[0], self.q[-1]))
        values = np.where(q > self.q[-1], self.F[-1] + (q - self.q[-1]) * self.F_q[-1], inside)
        if self.exterior_identity:
            values = np.where(q >= self.R, q, values)
        return float(values[0]) if scalar else values

    def F_q_of(self, q):
        scalar = np.ndim(q) == 0
        q = np.atleast_1d(np.asarray(q, dtype=float))
        self._check(q)
        inside = self._spline(np.clip(q, self.q[0], self.q[-1]), 1)
        values = np.where(q > self.q[-1], self.F_q[-1], inside)
        if self.exterior_identity:
            values = np.where(q >= self.R, 1.0, values)
        return float(values[0]) if scalar else values

    def F_hat(self, y):
        """Inverse of F: Hermite guess on the swapped table, then Newton steps"""
        scalar = np.ndim(y) == 0
        y = np.atleast_1d(np.asarray(y, dtype=float))
        if np.any(y < self.F[0] - 1e-12):
            raise CoverageError(f"F_hat({float(y.min()):.6g}) below the table image {self.F[0]:.6g}")
        guess = self._inverse_guess(np.clip(y, self.F[0], self.F[-1]))
        x = np.where(y > self.F[-1], self.q[-1] + (y - self.F[-1]) / self.F_q[-1], guess)
        for _ in range(NEWTON_STEPS):
            x = x - (self.F_of(np.maximum(x, self.q[0])) - y) / self.F_q_of(np.maximum(x, self.q[0]))
        x = np.maximum(x, self.q[0])
        if self.exterior_identity:
            x = np.where(y >= self.R, y, x)
        return float(x[0]) if scalar else x

    def F_hat_prime(self, y):
        return 1.0 / self.F_q_of(self.F_hat(y))

    def A_hat(self, y):
        """A(F_hat(y)); needs the reduced tables"""
        if self.reduced is None:
            raise CoverageError("A_hat needs the reduced solution")
        values = self.reduced.a(self.F_hat(y))
        return float(values[0]) if np.ndim(y) == 0 else values

    def A_hat_prime(self, y):
        if self.reduced is None:
            raise CoverageError("A_hat needs the reduced solution")
        x = self.F_hat(y)
        values = self.reduced.a_prime(x) / self.F_q_of(x)
        return float(values[0]) if np.ndim(y) == 0 else values

    def rows(self):
        """CSV rows q, F, A1, Ahat on the table nodes"""
        a1 = -2.0 / self.F_q
        a_hat = self.A_hat(self.q) if self.reduced is not None else np.full(self.q.size, np.nan)
        for row in zip(self.q, self.F, a1, np.atleast_1d(a_hat), strict=True):
            yield tuple(float(v) for v in row)


def build_F(q_nodes, A1_values, R: float, reduced: ReducedSolution | None = None) -> Reparametrization:
    """Integrate F node by node from F(2R) = 2R.

    A1 enters as a monotone cubic interpolant, constant past the last node.
    """
    q_nodes = np.asarray(q_nodes, dtype=float)
    a1_nodes = np.asarray(A1_values, dtype=float)
    if np.any(a1_nodes >= -1.0):
        j = int(np.argmax(a1_nodes))
        raise DomainError(f"A1 must stay below -1; A1({q_nodes[j]:.6g}) = {a1_nodes[j]:.6g}")
    a1_interp = PchipInterpolator(q_nodes, a1_nodes, extrapolate=False)

    def a1(p: float) -> float:
        if reduced is not None:
            return float(reduced.a1(p)[0])
        return float(a1_interp(min(max(p, q_nodes[0]), q_nodes[-1])))

    nodes = q_nodes.copy()
    if nodes[-1] < 2.0 * R:
        step = float(np.min(np.diff(nodes))) if nodes.size > 1 else 0.05
        extra = np.arange(nodes[-1] + step, 2.0 * R - 0.5 * step, step)
        nodes = np.concatenate((nodes, extra, [2.0 * R]))
    elif not np.any(np.isclose(nodes, 2.0 * R, rtol=0.0, atol=1e-12)):
        nodes = np.sort(np.concatenate((nodes, [2.0 * R])))
    anchor = int(np.argmin(np.abs(nodes - 2.0 * R)))
    nodes[anchor] = 2.0 * R

    F = np.empty(nodes.size)
    F[anchor] = 2.0 * R
    for k in range(anchor - 1, -1, -1):
        piece, _ = quad(lambda p: 2.0 / a1(p), nodes[k], nodes[k + 1], epsabs=1e-13, epsrel=1e-13, limit=100)
        F[k] = F[k + 1] + piece
    for k in range(anchor + 1, nodes.size):
        piece, _ = quad(lambda p: 2.0 / a1(p), nodes[k - 1], nodes[k], epsabs=1e-13, epsrel=1e-13, limit=100)
        F[k] = F[k - 1] - piece
    F_q = np.array([-2.0 / a1(p) for p in nodes])
    logger.debug(f"Built F on {nodes.size} nodes, F({nodes[0]:.4g}) = {F[0]:.6g}")
    return Reparametrization(nodes, F, F_q, R, reduced)


def reparametrization_from_reduced(reduced: ReducedSolution) -> Reparametrization:
    return build_F(reduced.q, reduced.A1, reduced.R, reduced)

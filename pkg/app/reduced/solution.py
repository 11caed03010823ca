"""Exact solution of the geometric reduced system.

  d_s mu  =  G mu^2 U_q / 4,   d_s U_q = -G mu U_q^2 / 4

with data (A1, A2) at s = 0 is mu = A1 exp(-G A s / 2), U_q = A2 exp(G A s / 2)
where A = -A1 A2 / 2, and U = -int_q^inf U_q dp.
"""

import csv
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy.integrate import quad, solve_ivp
from scipy.interpolate import PchipInterpolator

from app.core.errors import ArtifactError, CoverageError, QuadratureError, StabilityError
from config.logging_config import get_logger

logger = get_logger(__name__)

EXTERIOR_A1 = -2.0
QUAD_EPSABS = 1e-10


def _graft(q: np.ndarray, values: np.ndarray, R: float, exterior: float) -> np.ndarray:
    out = np.array(values, dtype=float)
    out[q > R] = exterior
    return out


@dataclass(frozen=True, eq=False)
class ReducedSolution:
    """Scattering tables with the exterior values (A1, A2, A) = (-2, 0, 0) for q > R.

    A is derived as -A1 A2 / 2 so that the product identity holds exactly.
    """

    q: np.ndarray
    A1: np.ndarray
    A2: np.ndarray
    G: float
    R: float
    omega: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 1.0]))

    def __post_init__(self):
        q = np.asarray(self.q, dtype=float)
        if q.ndim != 1 or q.size < 2 or np.any(np.diff(q) <= 0.0):
            raise CoverageError("reduced tables need at least two increasing q nodes")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "A1", _graft(q, self.A1, self.R, EXTERIOR_A1))
        object.__setattr__(self, "A2", _graft(q, self.A2, self.R, 0.0))

    @property
    def A(self) -> np.ndarray:
        return -0.5 * self.A1 * self.A2

    @property
    def q_min(self) -> float:
        return float(self.q[0])

    @cached_property
    def _interp(self) -> dict[str, PchipInterpolator]:
        return {
            "A1": PchipInterpolator(self.q, self.A1, extrapolate=False),
            "A2": PchipInterpolator(self.q, self.A2, extrapolate=False),
        }

    def _lookup(self, name: str, exterior: float, q, derivative: int = 0) -> np.ndarray:
        q = np.atleast_1d(np.asarray(q, dtype=float))
        if np.any(q < self.q_min - 1e-12):
            raise CoverageError(f"q={float(q.min()):.6g} below the table start {self.q_min:.6g}")
        interp = self._interp[name]
        if derivative:
            interp = interp.derivative(derivative)
            exterior = 0.0
        values = interp(np.clip(q, self.q_min, self.q[-1]))
        # exact exterior values beyond R and beyond the last node
        return np.where((q > self.R) | (q > self.q[-1]), exterior, values)

    def a1(self, q) -> np.ndarray:
        return self._lookup("A1", EXTERIOR_A1, q)

    def a2(self, q) -> np.ndarray:
        return self._lookup("A2", 0.0, q)

    def a(self, q) -> np.ndarray:
        return -0.5 * self.a1(q) * self.a2(q)

    def a_prime(self, q) -> np.ndarray:
        """dA/dq from the product rule on the interpolants"""
        return -0.5 * (
            self._lookup("A1", 0.0, q, 1) * self.a2(q) + self.a1(q) * self._lookup("A2", 0.0, q, 1)
        )

    def rows(self):
        """CSV rows q, A1, A2, A"""
        for row in zip(self.q, self.A1, self.A2, self.A, strict=True):
            yield tuple(float(v) for v in row)


def eval_reduced(sol: ReducedSolution, s, q, omega=None) -> tuple[np.ndarray, np.ndarray]:
    """(mu~, U~_q) at slow time s and q (vectorized in q)"""
    a1 = sol.a1(q)
    a2 = sol.a2(q)
    A = -0.5 * a1 * a2
    growth = np.exp(0.5 * sol.G * A * s)
    return a1 / growth, a2 * growth


def eval_U(sol: ReducedSolution, s: float, q: float, omega=None) -> float:
    """U~(s, q) = -int_q^R A2(p) exp(G A(p) s / 2) dp (zero for q >= R)"""
    q = float(q)
    if q >= sol.R:
        return 0.0
    if q < sol.q_min - 1e-12:
        raise CoverageError(f"q={q:.6g} below the table start {sol.q_min:.6g}")

    def integrand(p: float) -> float:
        return float(eval_reduced(sol, s, p)[1][0])

    breaks = [float(p) for p in sol.q if q < p < sol.R]
    value, abserr, *rest = quad(
        integrand,
        q,
        sol.R,
        epsabs=QUAD_EPSABS,
        epsrel=1e-12,
        limit=max(200, 4 * len(breaks)),
        points=breaks[:: max(1, len(breaks) // 100)] or None,
        full_output=1,
    )
    if len(rest) > 1 and abserr > 10 * QUAD_EPSABS:
        raise QuadratureError(f"U~ quadrature at q={q:.6g}, s={s:.6g}: {rest[1]}")
    return -value


@dataclass(frozen=True)
class ReducedTrajectory:
    """Numerical solution of the reduced ODE pair at one (q, omega)"""

    s: np.ndarray
    mu: np.ndarray
    U_q: np.ndarray

    @property
    def product_drift(self) -> float:
        product = self.mu * self.U_q
        return float(np.max(np.abs(product - product[0])))


def integrate_reduced(
    A1: float,
    A2: float,
    G: float,
    s_end: float,
    s_eval=None,
    rtol: float = 1e-13,
    atol: float = 1e-14,
) -> ReducedTrajectory:
    """RK4(5) solution of the reduced system from (mu, U_q) = (A1, A2) at s = 0"""

    def rhs(s, y):
        mu, uq = y
        return [0.25 * G * mu * mu * uq, -0.25 * G * mu * uq * uq]

    s_eval = np.linspace(0.0, s_end, 101) if s_eval is None else np.asarray(s_eval, dtype=float)
    sol = solve_ivp(rhs, (0.0, s_end), [A1, A2], method="RK45", rtol=rtol, atol=atol, t_eval=s_eval)
    if sol.status < 0:
        raise StabilityError(f"reduced system (A1={A1:g}, A2={A2:g}, G={G:g}): {sol.message}")
    return ReducedTrajectory(sol.t, sol.y[0], sol.y[1])


def write_reduced_csv(sol: ReducedSolution, path: str | Path) -> None:
    """Header line '# G=<value>' followed by q, A1, A2, A"""
    try:
        with open(path, "w", newline="") as fh:
            fh.write(f"# G={sol.G:.17g}\n")
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["q", "A1", "A2", "A"])
            writer.writerows(tuple(f"{v:.17g}" for v in row) for row in sol.rows())
    except OSError as e:
        raise ArtifactError(f"cannot write {path}: {e}") from e


def read_reduced_csv(path: str | Path, R: float) -> ReducedSolution:
    try:
        with open(path, newline="") as fh:
            header = fh.readline().strip()
            if not header.startswith("# G="):
                raise ArtifactError(f"{path}: missing G header")
            G = float(header[4:])
            rows = list(csv.DictReader(fh))
    except OSError as e:
        raise ArtifactError(f"cannot read {path}: {e}") from e
    q = np.array([float(r["q"]) for r in rows])
    A1 = np.array([float(r["A1"]) for r in rows])
    A2 = np.array([float(r["A2"]) for r in rows])
    return ReducedSolution(q, A1, A2, G, R)

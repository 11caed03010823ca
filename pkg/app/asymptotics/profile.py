"""Asymptotic variables in the coordinates (s, q, omega).

At slow time s = eps ln t - delta_eff and q-value q the profile holds
mu = q_t - q_r, U = r u / eps and U_q = (u + r u_r) / (eps q_r), evaluated at
the radius where the optical function equals q.
"""

from dataclasses import dataclass, field

import numpy as np

from app.core.errors import CoverageError
from app.geodesics.sheet import OpticalSheet
from app.reduced.solution import ReducedSolution, eval_reduced, eval_U
from app.wave.field import RadialField
from config.logging_config import get_logger

logger = get_logger(__name__)

PROFILE_COLUMNS = ("s", "t", "q", "r", "mu", "U", "U_q")


@dataclass(frozen=True, eq=False)
class AsymptoticProfile:
    """mu, U, U_q on diagnostic times (rows) x q nodes (columns)"""

    t: np.ndarray
    s: np.ndarray
    q: np.ndarray
    r: np.ndarray
    mu: np.ndarray
    U: np.ndarray
    U_q: np.ndarray
    epsilon: float
    R: float
    omega: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 1.0]))

    @property
    def n_times(self) -> int:
        return self.t.size

    @property
    def n_nodes(self) -> int:
        return self.q.size

    def d_ds(self, values: np.ndarray) -> np.ndarray:
        """Centered differences in s over the diagnostic sequence"""
        if self.epsilon == 0.0 or self.n_times < 3:
            return np.zeros_like(values)
        return np.gradient(values, self.s, axis=0)

    def residuals(self, G: float) -> tuple[np.ndarray, np.ndarray]:
        """(d_s mu - G mu^2 U_q / 4, d_s U_q + G mu U_q^2 / 4)"""
        res1 = self.d_ds(self.mu) - 0.25 * G * self.mu**2 * self.U_q
        res2 = self.d_ds(self.U_q) + 0.25 * G * self.mu * self.U_q**2
        return res1, res2

    def residual_sup(self, G: float) -> np.ndarray:
        """sup over q of |res1| and |res2| per diagnostic time (interior times only)"""
        res1, res2 = self.residuals(G)
        sup = np.maximum(np.max(np.abs(res1), axis=1), np.max(np.abs(res2), axis=1))
        if self.n_times >= 3:
            sup[0] = sup[-1] = np.nan
        return sup

    def product(self) -> np.ndarray:
        return self.mu * self.U_q

    def rows(self):
        for i in range(self.n_times):
            for j in range(self.n_nodes):
                yield (
                    self.s[i],
                    self.t[i],
                    self.q[j],
                    self.r[i, j],
                    self.mu[i, j],
                    self.U[i, j],
                    self.U_q[i, j],
                )


def default_q_nodes(sheet: OpticalSheet) -> np.ndarray:
    """q-values of the characteristics present at the earliest diagnostic time"""
    return sheet.slice_at(float(sheet.times[0])).z.copy()


def to_asymptotic(
    fld: RadialField,
    sheet: OpticalSheet,
    s_list=None,
    q_nodes=None,
    times=None,
) -> AsymptoticProfile:
    """Sample (mu, U, U_q) at the (s, q) nodes.

    Times come from ``s_list`` (t = exp((s + delta_eff) / eps)) or, for
    eps = 0 where s degenerates, from ``times`` (default: the sheet's times).
    """
    region = sheet.region
    eps = region.epsilon
    if s_list is not None and eps > 0.0:
        t = np.asarray(region.t_of_s(np.asarray(s_list, dtype=float)), dtype=float)
    else:
        t = np.asarray(sheet.times if times is None else times, dtype=float)
    s = np.asarray(region.s_of_t(t), dtype=float)
    q = np.asarray(default_q_nodes(sheet) if q_nodes is None else q_nodes, dtype=float)
    if q.size == 0:
        raise CoverageError("no q nodes to sample")

    shape = (t.size, q.size)
    r, mu, U, U_q = (np.empty(shape) for _ in range(4))
    for i, ti in enumerate(t):
        sl = sheet.slice_at(float(ti))
        radii = np.array([sl.r_of_q(float(qj)) for qj in q])
        q_t, q_r = sl.gradient_at(radii)
        sample = fld.sample(float(ti), radii)
        r[i] = radii
        mu[i] = q_t - q_r
        if eps == 0.0:
            U[i] = 0.0
            U_q[i] = 0.0
        else:
            U[i] = radii * sample.u / eps
            U_q[i] = (sample.u + radii * sample.u_r) / (eps * q_r)
    logger.debug(f"Asymptotic profile on {t.size} times x {q.size} q nodes")
    return AsymptoticProfile(t, s, q, r, mu, U, U_q, eps, region.R)


def profile_from_reduced(
    sol: ReducedSolution,
    s_list,
    q_nodes,
    epsilon: float,
    delta_eff: float = 0.0,
) -> AsymptoticProfile:
    """Profile generated by the exact reduced flow, for extraction round trips"""
    if epsilon <= 0.0:
        raise CoverageError("exact-flow profiles need eps > 0 to place s on a time axis")
    s = np.asarray(s_list, dtype=float)
    q = np.asarray(q_nodes, dtype=float)
    t = np.exp((s + delta_eff) / epsilon)
    shape = (s.size, q.size)
    mu, U_q, U = (np.empty(shape) for _ in range(3))
    for i, si in enumerate(s):
        mu[i], U_q[i] = eval_reduced(sol, float(si), q)
        U[i] = [eval_U(sol, float(si), float(qj)) for qj in q]
    r = t[:, None] + q[None, :]
    return AsymptoticProfile(t, s, q, r, mu, U, U_q, epsilon, sol.R, sol.omega)


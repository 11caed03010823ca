"""Null frames {e1, e2, e3, e4} along characteristics.

e4 = L / L^0 with L^a = 2 g^{ab} p_b, e3 = e4 + 2 g^{0a} d_a, and
e_a = E_a - E_a^0 e4 where E_a is parallel transported from an orthonormal
basis tangent to the initial sphere on H.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.integrate import solve_ivp

from app.core.errors import DegenerateError, FrameDriftError, StabilityError
from app.core.metrics import metrics_collector
from app.geodesics.characteristics import DEFAULT_ATOL, DEFAULT_RTOL, Bicharacteristic
from app.metric.family import MetricFamily, christoffel
from app.wave.field import RadialField
from config.logging_config import get_logger

logger = get_logger(__name__)

DEFAULT_FRAME_TOL = 1e-6
FRAME_COLUMNS = ("t", "r", "chi11", "chi12", "chi22", "trchi", "frame_defect_max", "raych_defect")


def sphere_tangents(omega: np.ndarray, angle: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
    """Euclidean orthonormal pair tangent to the unit sphere at omega, rotated by ``angle``"""
    ref = np.array([1.0, 0.0, 0.0]) if abs(omega[2]) > 0.9 else np.array([0.0, 0.0, 1.0])
    t1 = ref - (ref @ omega) * omega
    t1 /= np.linalg.norm(t1)
    t2 = np.cross(omega, t1)
    c, s = math.cos(angle), math.sin(angle)
    return c * t1 + s * t2, -s * t1 + c * t2


def null_generator(ginv: np.ndarray, p: np.ndarray) -> np.ndarray:
    """e4 = L / L^0"""
    L = 2.0 * ginv @ p
    if L[0] <= 0.0:
        raise DegenerateError(f"L^0 = {L[0]:.3g} <= 0")
    return L / L[0]


def complete_frame(ginv: np.ndarray, p: np.ndarray, E: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(e4, e3, e_a) from the momentum and the transported pair E (2 x 4)"""
    e4 = null_generator(ginv, p)
    e3 = e4 + 2.0 * ginv[0]
    e = E - np.outer(E[:, 0], e4)
    return e4, e3, e


def frame_defect(g: np.ndarray, e4: np.ndarray, e3: np.ndarray, e: np.ndarray) -> float:
    """Largest deviation of the ten frame inner products from their null-frame values"""
    ip = lambda a, b: float(a @ g @ b)  # noqa: E731
    defects = [
        ip(e4, e4),
        ip(e3, e3),
        ip(e3, e4) - 2.0,
        ip(e[0], e[0]) - 1.0,
        ip(e[1], e[1]) - 1.0,
        ip(e[0], e[1]),
        ip(e4, e[0]),
        ip(e4, e[1]),
        ip(e3, e[0]),
        ip(e3, e[1]),
    ]
    return float(max(abs(d) for d in defects))


@dataclass
class FrameRecord:
    """Frame samples along one characteristic"""

    geo: Bicharacteristic
    t: np.ndarray
    x: np.ndarray
    p: np.ndarray
    u: np.ndarray
    E: np.ndarray
    e4: np.ndarray
    e3: np.ndarray
    e: np.ndarray
    frame_defect: np.ndarray
    chi: np.ndarray | None = None
    chi_asymmetry: np.ndarray | None = None
    raych_defect: np.ndarray | None = field(default=None)

    @property
    def r(self) -> np.ndarray:
        return np.linalg.norm(self.x, axis=1)

    @property
    def tr_chi(self) -> np.ndarray:
        if self.chi is None:
            raise ValueError("chi has not been computed for this record")
        return self.chi[:, 0, 0] + self.chi[:, 1, 1]

    @property
    def max_frame_defect(self) -> float:
        return float(np.max(self.frame_defect)) if self.frame_defect.size else 0.0

    def with_chi(self, chi: np.ndarray, asymmetry: np.ndarray) -> "FrameRecord":
        return replace(self, chi=chi, chi_asymmetry=asymmetry)

    def with_raychaudhuri(self, defect: np.ndarray) -> "FrameRecord":
        return replace(self, raych_defect=defect)

    def select(self, idx) -> "FrameRecord":
        """Record restricted to the samples at ``idx``"""
        idx = np.asarray(idx, dtype=int)

        def pick(a):
            return None if a is None else a[idx]

        return replace(
            self,
            t=self.t[idx], x=self.x[idx], p=self.p[idx], u=self.u[idx], E=self.E[idx],
            e4=self.e4[idx], e3=self.e3[idx], e=self.e[idx], frame_defect=self.frame_defect[idx],
            chi=pick(self.chi), chi_asymmetry=pick(self.chi_asymmetry), raych_defect=pick(self.raych_defect),
        )
    def rows(self):
        """CSV rows per FRAME_COLUMNS; missing diagnostics are NaN"""
        n = self.t.size
        chi = self.chi if self.chi is not None else np.full((n, 2, 2), np.nan)
        raych = self.raych_defect if self.raych_defect is not None else np.full(n, np.nan)
        r = self.r
        for i in range(n):
            yield (
                self.t[i],
                r[i],
                chi[i, 0, 0],
                chi[i, 0, 1],
                chi[i, 1, 1],
                chi[i, 0, 0] + chi[i, 1, 1],
                self.frame_defect[i],
                raych[i],
            )


def seed_frame(fam: MetricFamily, fld: RadialField, geo: Bicharacteristic, basis_angle: float = 0.0):
    """(E, e4, e3, e) at the seed of ``geo``.

    E_a has E_a^0 = 0, is tangent to the sphere r = const of H, depends only
    on omega and is orthonormal for g_{ij}(u) at the seed.
    """
    x0 = geo.x[0]
    u = float(fld.sample(geo.t[0], float(np.linalg.norm(x0))).u)
    ginv = fam.inverse(u)
    g = fam.lower(u)
    t1, t2 = sphere_tangents(geo.seed.direction.omega, basis_angle)
    v1 = np.concatenate(([0.0], t1))
    v2 = np.concatenate(([0.0], t2))
    E1 = v1 / math.sqrt(v1 @ g @ v1)
    v2 = v2 - (v2 @ g @ E1) * E1
    E2 = v2 / math.sqrt(v2 @ g @ v2)
    E = np.stack((E1, E2))
    e4, e3, e = complete_frame(ginv, geo.p[0], E)
    return E, e4, e3, e


def _transport_rhs(fam: MetricFamily, fld: RadialField):
    def rhs(t, y):
        x = y[1:4]
        p = y[4:8]
        E = y[8:16].reshape(2, 4)
        r = float(np.linalg.norm(x))
        sample = fld.sample(t, r)
        u = float(sample.u)
        du = sample.gradient(x)
        ginv = fam.inverse(u)
        xdot = 2.0 * ginv @ p
        if xdot[0] <= 0.0:
            raise DegenerateError(f"dx^0/dsigma = {xdot[0]:.3g} <= 0 at t={t:.6g}")
        pdot = -du * float(p @ fam.inverse_du(u, 1) @ p)
        gamma = christoffel(fam, u, du)
        Edot = -np.einsum("m,an,bmn->ab", xdot, E, gamma)
        inv = 1.0 / xdot[0]
        return np.concatenate(([inv], xdot[1:] * inv, pdot * inv, Edot.ravel() * inv))

    return rhs


def transport(
    fam: MetricFamily,
    fld: RadialField,
    geo: Bicharacteristic,
    frame0=None,
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
    frame_tol: float = DEFAULT_FRAME_TOL,
    basis_angle: float = 0.0,
) -> FrameRecord:
    """Parallel transport of E_a along ``geo``, sampled at the curve's sample times"""
    if frame0 is None:
        frame0 = seed_frame(fam, fld, geo, basis_angle)
    E0 = frame0[0]
    rhs = _transport_rhs(fam, fld)
    times = geo.t
    y = np.concatenate(([0.0], geo.x[0], geo.p[0], E0.ravel()))
    states = [y]
    for t_a, t_b in zip(times[:-1], times[1:], strict=True):
        sol = solve_ivp(rhs, (t_a, t_b), y, method="RK45", rtol=rtol, atol=atol)
        if sol.status < 0:
            raise StabilityError(f"frame transport z={geo.z:.4g}: {sol.message}")
        y = sol.y[:, -1]
        states.append(y)
    states = np.asarray(states)

    n = times.size
    xs, ps = states[:, 1:4], states[:, 4:8]
    Es = states[:, 8:16].reshape(n, 2, 4)
    us = np.empty(n)
    e4s, e3s, es, defects = np.empty((n, 4)), np.empty((n, 4)), np.empty((n, 2, 4)), np.empty(n)
    for i in range(n):
        us[i] = float(fld.sample(times[i], float(np.linalg.norm(xs[i]))).u)
        ginv = fam.inverse(us[i])
        e4s[i], e3s[i], es[i] = complete_frame(ginv, ps[i], Es[i])
        defects[i] = frame_defect(fam.lower(us[i]), e4s[i], e3s[i], es[i])

    worst = float(defects.max())
    metrics_collector.record_frame_defect(worst)
    if worst > frame_tol:
        i = int(np.argmax(defects))
        raise FrameDriftError(
            f"frame defect {worst:.3g} > {frame_tol:g} on z={geo.z:.4g} at t={times[i]:.6g}"
        )
    logger.debug(f"Transported frame along z={geo.z:.4f}, max defect {worst:.2e}")
    return FrameRecord(geo, times.copy(), xs, ps, us, Es, e4s, e3s, es, defects)

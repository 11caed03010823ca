"""Bicharacteristics of the eikonal equation g^{ab}(u) q_a q_b = 0.

Along a characteristic x' = 2 g^{ab} p_b, p_a' = -(d_a g^{mn}) p_m p_n and the
q-value z is constant. Integration uses x^0 = t as the independent variable;
the affine parameter sigma is carried as an extra state.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from app.core.errors import DegenerateError, RootError, StabilityError
from app.core.metrics import track_trace
from app.geodesics.region import RegionSpec, Seed
from app.metric.family import MetricFamily
from app.wave.field import RadialField
from config.logging_config import get_logger

logger = get_logger(__name__)

DEFAULT_RTOL = 1e-10
DEFAULT_ATOL = 1e-12
DEFAULT_NULL_TOL = 1e-8
MAX_REFINEMENTS = 3
BICHARACTERISTIC_COLUMNS = ("z", "sigma", "t", "x1", "x2", "x3", "p0", "p1", "p2", "p3", "null_residual")
# comment line for CSVs whose leading z column labels the characteristic
SEED_COLUMN_COMMENT = "z = q-value r - t of the seed on H; rows sharing z belong to one characteristic"


@dataclass(frozen=True)
class LocalGeometry:
    """Field and metric data at one spacetime point"""

    u: float
    du: np.ndarray
    ginv: np.ndarray
    ginv_du: np.ndarray


def local_geometry(fam: MetricFamily, fld: RadialField, t: float, x: np.ndarray) -> LocalGeometry:
    """Interpolated u, its Cartesian gradient and the metric at (t, x)"""
    r = float(np.linalg.norm(x))
    sample = fld.sample(t, r)
    du = sample.gradient(x)
    return LocalGeometry(sample.u, du, fam.inverse(sample.u), fam.inverse_du(sample.u, 1))


def null_residual(ginv: np.ndarray, p: np.ndarray) -> float:
    """g^{ab} p_a p_b"""
    return float(p @ ginv @ p)


@dataclass
class Bicharacteristic:
    """Samples of one traced characteristic at prescribed times"""

    seed: Seed
    z: float
    p0: np.ndarray
    sigma: np.ndarray = field(default_factory=lambda: np.zeros(0))
    t: np.ndarray = field(default_factory=lambda: np.zeros(0))
    x: np.ndarray = field(default_factory=lambda: np.zeros((0, 3)))
    p: np.ndarray = field(default_factory=lambda: np.zeros((0, 4)))
    null_residual: np.ndarray = field(default_factory=lambda: np.zeros(0))
    rtol: float = DEFAULT_RTOL

    @property
    def max_null_residual(self) -> float:
        return float(np.max(np.abs(self.null_residual))) if self.null_residual.size else 0.0

    @property
    def r(self) -> np.ndarray:
        return np.linalg.norm(self.x, axis=1)

    @property
    def q_r(self) -> np.ndarray:
        """Radial component of p, i.e. q_r along the curve"""
        return np.einsum("ni,ni->n", self.p[:, 1:], self.x) / self.r

    def index_of(self, t: float) -> int:
        """Sample index at time t (must be one of the sample times)"""
        i = int(np.searchsorted(self.t, t))
        for j in (i - 1, i, i + 1):
            if 0 <= j < self.t.size and abs(self.t[j] - t) <= 1e-9 * max(1.0, t):
                return j
        raise KeyError(t)

    def rows(self):
        """CSV rows per BICHARACTERISTIC_COLUMNS"""
        for i in range(self.t.size):
            yield (self.z, self.sigma[i], self.t[i], *self.x[i], *self.p[i], self.null_residual[i])


def _tangential_coefficients(region: RegionSpec) -> tuple[float, float]:
    # q_i = omega_i (c0 + c1 q_t) from X_i q = omega_i (1 - 1/kappa) on H
    a = 1.0 / region.kappa
    return 1.0 - a, -a


def init_on_H(fam: MetricFamily, fld: RadialField, region: RegionSpec, seed: Seed) -> tuple[float, np.ndarray]:
    """q-value z and initial covector p(0) = dq at a seed on H.

    Solves the eikonal quadratic in q_t under the tangential constraints of
    q = r - t on H and keeps the root near -1.
    """
    if abs(seed.r - float(region.cone_radius(seed.t))) > 1e-9 * max(1.0, seed.r):
        raise RootError(f"seed (t={seed.t:.6g}, r={seed.r:.6g}) is not on H")
    omega = seed.direction.omega
    geo = local_geometry(fam, fld, seed.t, seed.x)
    g = geo.ginv
    W = float(g[0, 1:] @ omega)
    S = float(omega @ g[1:, 1:] @ omega)
    c0, c1 = _tangential_coefficients(region)
    a2 = g[0, 0] + 2.0 * W * c1 + S * c1**2
    a1 = 2.0 * W * c0 + 2.0 * S * c0 * c1
    a0 = S * c0**2
    disc = a1 * a1 - 4.0 * a2 * a0
    if disc < 0.0:
        raise RootError(f"negative discriminant {disc:.3g} at t={seed.t:.6g}")
    sq = math.sqrt(disc)
    if a2 == 0.0:
        roots = [-a0 / a1]
    else:
        # cancellation-free pair
        qq = -0.5 * (a1 + math.copysign(sq, a1))
        roots = [qq / a2, a0 / qq] if qq != 0.0 else [-a1 / (2.0 * a2)]
    q_t = min(roots, key=lambda v: abs(v + 1.0))
    # halfway between -1 and the discarded flat-space root
    threshold = region.kappa / (1.0 + region.kappa)
    if abs(q_t + 1.0) >= threshold:
        raise RootError(f"no root near -1 (roots {roots}); |u| too large at t={seed.t:.6g}")

    def residual(qt):
        return a2 * qt * qt + a1 * qt + a0

    for _ in range(3):
        slope = 2.0 * a2 * q_t + a1
        if slope == 0.0:
            break
        q_t -= residual(q_t) / slope

    p = np.concatenate(([q_t], omega * (c0 + c1 * q_t)))
    return seed.z, p


def _project_null(ginv: np.ndarray, p: np.ndarray) -> np.ndarray:
    # Adjust p_0 so that g^{ab} p_a p_b = 0, keeping the root nearest the current one
    a = ginv[0, 0]
    b = 2.0 * float(ginv[0, 1:] @ p[1:])
    c = float(p[1:] @ ginv[1:, 1:] @ p[1:])
    disc = b * b - 4.0 * a * c
    if disc < 0.0:
        return p
    sq = math.sqrt(disc)
    candidates = ((-b + sq) / (2.0 * a), (-b - sq) / (2.0 * a))
    projected = p.copy()
    projected[0] = min(candidates, key=lambda v: abs(v - p[0]))
    return projected


def _rhs(fam: MetricFamily, fld: RadialField):
    def rhs(t, y):
        x = y[1:4]
        p = y[4:8]
        geo = local_geometry(fam, fld, t, x)
        xdot = 2.0 * geo.ginv @ p
        if xdot[0] <= 0.0:
            raise DegenerateError(f"dx^0/dsigma = {xdot[0]:.3g} <= 0 at t={t:.6g}")
        pdot = -geo.du * float(p @ geo.ginv_du @ p)
        inv = 1.0 / xdot[0]
        return np.concatenate(([inv], xdot[1:] * inv, pdot * inv))

    return rhs


@track_trace
def trace(
    fam: MetricFamily,
    fld: RadialField,
    region: RegionSpec,
    seed: Seed,
    t_samples,
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
    null_tol: float = DEFAULT_NULL_TOL,
    project: bool = True,
) -> Bicharacteristic:
    """Integrate the characteristic from ``seed`` through every sample time >= seed.t.

    After each segment the null residual is checked; a segment exceeding
    ``null_tol`` is redone with a tenfold tighter tolerance. The residual is
    recorded before the optional projection of p_0 back onto the null cone.
    """
    z, p0 = init_on_H(fam, fld, region, seed)
    times = np.unique(np.asarray([t for t in t_samples if t >= seed.t - 1e-12], dtype=float))
    if times.size == 0 or times[0] > seed.t:
        times = np.concatenate(([seed.t], times))
    times[0] = seed.t

    rhs = _rhs(fam, fld)
    y = np.concatenate(([0.0], seed.x, p0))
    sigma, xs, ps, residuals = [0.0], [seed.x.copy()], [p0.copy()], [0.0]
    residuals[0] = null_residual(local_geometry(fam, fld, seed.t, seed.x).ginv, p0)

    for t_a, t_b in zip(times[:-1], times[1:], strict=True):
        seg_rtol = rtol
        for attempt in range(MAX_REFINEMENTS + 1):
            sol = solve_ivp(rhs, (t_a, t_b), y, method="RK45", rtol=seg_rtol, atol=atol)
            if sol.status < 0:
                raise StabilityError(f"characteristic z={z:.4g}: {sol.message}")
            y_new = sol.y[:, -1]
            geo = local_geometry(fam, fld, t_b, y_new[1:4])
            res = null_residual(geo.ginv, y_new[4:8])
            if abs(res) <= null_tol or attempt == MAX_REFINEMENTS:
                break
            seg_rtol /= 10.0
        if abs(res) > null_tol:
            raise StabilityError(
                f"characteristic z={z:.4g}: null residual {res:.3g} > {null_tol:g} at t={t_b:.6g}"
            )
        if project:
            y_new = y_new.copy()
            y_new[4:8] = _project_null(geo.ginv, y_new[4:8])
        y = y_new
        sigma.append(y[0])
        xs.append(y[1:4].copy())
        ps.append(y[4:8].copy())
        residuals.append(res)

    logger.debug(f"Traced z={z:.4f} from t={seed.t:.4g} to t={times[-1]:.4g}")
    return Bicharacteristic(
        seed=seed,
        z=z,
        p0=p0,
        sigma=np.asarray(sigma),
        t=times,
        x=np.asarray(xs),
        p=np.asarray(ps),
        null_residual=np.asarray(residuals),
        rtol=rtol,
    )

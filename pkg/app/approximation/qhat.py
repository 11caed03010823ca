"""Second optical function q_hat from the normalized profile mu_hat.

q_hat solves q_hat_t - q_hat_r = mu_hat(eps ln t - delta_eff, q_hat) with
mu_hat(s, q) = -2 exp(-G A_hat(q) s / 2). Along each ray r + t = c the value
z(tau) = q_hat(tau, c - tau) starts from z = 2R at tau0 = c/2 - R. The
derivative w = d z / d c is carried alongside, giving q_hat_r = w and
q_hat_t = w + mu_hat.
"""

import time
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from app.approximation.reparametrization import Reparametrization
from app.core.errors import CoverageError, StabilityError
from app.core.worker_pool import WorkerPool
from app.geodesics.region import RegionSpec
from config.logging_config import get_logger, log_performance

logger = get_logger(__name__)

RAY_RTOL = 1e-10
RAY_ATOL = 1e-12


def mu_hat(rep: Reparametrization, G: float, s: float, z):
    return -2.0 * np.exp(-0.5 * G * rep.A_hat(z) * s)


@dataclass(frozen=True)
class RayValue:
    qhat: float
    mu_hat: float
    nu_hat: float


def solve_ray(rep: Reparametrization, G: float, region: RegionSpec, t: float, r: float) -> RayValue:
    """q_hat, mu_hat and nu_hat = q_hat_t + q_hat_r at one point"""
    if r - t > region.R:
        return RayValue(r - t, -2.0, 0.0)
    c = r + t
    tau0 = 0.5 * c - region.R
    if tau0 <= 0.0:
        raise CoverageError(f"ray r+t={c:.6g} leaves q_hat=2R before t=0")
    s0 = float(region.s_of_t(tau0))
    w0 = -0.5 * float(mu_hat(rep, G, s0, 2.0 * region.R))

    def rhs(tau, y):
        s = region.epsilon * np.log(tau) - region.delta_eff
        z, w = y
        m = float(mu_hat(rep, G, s, z))
        dm_dz = -0.5 * G * s * float(rep.A_hat_prime(z)) * m
        return [m, dm_dz * w]

    sol = solve_ivp(rhs, (tau0, t), [2.0 * region.R, w0], method="RK45", rtol=RAY_RTOL, atol=RAY_ATOL)
    if sol.status < 0 or not np.all(np.isfinite(sol.y[:, -1])):
        raise StabilityError(f"q_hat ray r+t={c:.6g}: {sol.message}")
    z, w = sol.y[:, -1]
    m = float(mu_hat(rep, G, float(region.s_of_t(t)), z))
    return RayValue(float(z), m, float(2.0 * w + m))


@dataclass(frozen=True, eq=False)
class QhatTable:
    """q_hat, mu_hat, nu_hat on (time, radii) slices of a diagnostic grid"""

    times: np.ndarray
    r: tuple[np.ndarray, ...]
    qhat: tuple[np.ndarray, ...]
    mu_hat: tuple[np.ndarray, ...]
    nu_hat: tuple[np.ndarray, ...]

    def index_of(self, t: float) -> int:
        hit = np.flatnonzero(np.abs(self.times - t) <= 1e-12 * max(1.0, t))
        if hit.size == 0:
            raise CoverageError(f"q_hat table has no slice at t={t:.6g}")
        return int(hit[0])

    def sup_nu(self) -> np.ndarray:
        return np.array([np.max(np.abs(v)) if v.size else 0.0 for v in self.nu_hat])

    def is_monotone(self) -> bool:
        return all(np.all(np.diff(q) > 0.0) for q in self.qhat)

    def rows(self):
        for i, t in enumerate(self.times):
            for row in zip(self.r[i], self.qhat[i], self.mu_hat[i], self.nu_hat[i], strict=True):
                yield (float(t), *(float(v) for v in row))


def solve_qhat(
    rep: Reparametrization,
    G: float,
    region: RegionSpec,
    grid: dict[float, np.ndarray],
    pool: WorkerPool | None = None,
) -> QhatTable:
    """Tabulate q_hat on ``grid`` (time -> increasing radii); rays run on ``pool``"""
    pool = pool or WorkerPool(max_workers=1, name="qhat")
    times = np.array(sorted(grid), dtype=float)
    points = [(float(t), float(r)) for t in times for r in np.asarray(grid[t], dtype=float)]
    started = time.time()
    values = pool.map_ordered(lambda p: solve_ray(rep, G, region, *p), points)
    log_performance(logger, "solve_qhat", (time.time() - started) * 1000, rays=len(points))

    r_out, q_out, mu_out, nu_out = [], [], [], []
    k = 0
    for t in times:
        n = np.asarray(grid[t]).size
        chunk = values[k : k + n]
        k += n
        r_out.append(np.asarray(grid[t], dtype=float))
        q_out.append(np.array([v.qhat for v in chunk]))
        mu_out.append(np.array([v.mu_hat for v in chunk]))
        nu_out.append(np.array([v.nu_hat for v in chunk]))
    table = QhatTable(times, tuple(r_out), tuple(q_out), tuple(mu_out), tuple(nu_out))
    if not table.is_monotone():
        logger.warning("q_hat is not strictly increasing in r on every slice")
    logger.info(f"Solved q_hat on {times.size} times, {len(points)} rays")
    return table

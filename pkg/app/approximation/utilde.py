"""The approximate solution u_tilde = eps r^-1 U_tilde(s, q_tilde) with q_tilde = F_hat(q_hat).

U_tilde(s, F_hat(q)) equals U_hat(s, q) = -int_q^R U_tilde_q(s, F_hat(p)) F_hat'(p) dp,
so every grid value is computed both ways and the two must agree.
"""

from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from app.approximation.qhat import QhatTable, solve_ray
from app.approximation.reparametrization import Reparametrization
from app.core.errors import CoverageError, QuadratureError
from app.core.worker_pool import WorkerPool
from app.geodesics.region import RegionSpec
from app.reduced.solution import QUAD_EPSABS, ReducedSolution, eval_reduced, eval_U
from config.logging_config import get_logger

logger = get_logger(__name__)

APPROX_COLUMNS = ("t", "r", "qhat", "mu_hat", "nu_hat", "qtilde", "U_tilde", "U_hat", "u_tilde")
# agreement required between the two evaluation routes
ROUTE_TOL = 1e-8


def U_hat(rep: Reparametrization, reduced: ReducedSolution, s: float, qhat: float) -> float:
    """-int_{q_hat}^R U_tilde_q(s, F_hat(p)) / F_q(F_hat(p)) dp"""
    qhat = float(qhat)
    if qhat >= reduced.R:
        return 0.0

    def integrand(p: float) -> float:
        x = rep.F_hat(p)
        return float(eval_reduced(reduced, s, x)[1][0]) / rep.F_q_of(x)

    images = rep.F_of(reduced.q[reduced.q < reduced.R])
    breaks = [float(p) for p in np.atleast_1d(images) if qhat < p < reduced.R]
    value, abserr, *rest = quad(
        integrand,
        qhat,
        reduced.R,
        epsabs=QUAD_EPSABS,
        epsrel=1e-12,
        limit=max(200, 4 * len(breaks)),
        points=breaks[:: max(1, len(breaks) // 100)] or None,
        full_output=1,
    )
    if len(rest) > 1 and abserr > 10 * QUAD_EPSABS:
        raise QuadratureError(f"U_hat quadrature at q_hat={qhat:.6g}, s={s:.6g}: {rest[1]}")
    return -value


@dataclass(frozen=True)
class PointValue:
    qhat: float
    qtilde: float
    U_tilde: float
    U_hat: float
    u_tilde: float


@dataclass(frozen=True, eq=False)
class ApproxSolution:
    """u_tilde on the q_hat grid, immutable once built"""

    rep: Reparametrization
    reduced: ReducedSolution
    region: RegionSpec
    table: QhatTable
    qtilde: tuple[np.ndarray, ...]
    U_tilde: tuple[np.ndarray, ...]
    U_hat: tuple[np.ndarray, ...]
    u_tilde: tuple[np.ndarray, ...]

    @property
    def times(self) -> np.ndarray:
        return self.table.times

    def route_defect(self) -> float:
        """max |U_tilde(s, F_hat(q_hat)) - U_hat(s, q_hat)| over the grid"""
        gaps = [np.max(np.abs(a - b)) for a, b in zip(self.U_tilde, self.U_hat, strict=True) if a.size]
        return float(max(gaps)) if gaps else 0.0

    def evaluate(self, t: float, r: float) -> float:
        """u_tilde at a point off the grid (one ray solve and one quadrature)"""
        return _point(self.rep, self.reduced, self.region, t, r, both_routes=False).u_tilde

    def rows(self):
        for i, t in enumerate(self.times):
            columns = (
                self.table.r[i], self.table.qhat[i], self.table.mu_hat[i], self.table.nu_hat[i],
                self.qtilde[i], self.U_tilde[i], self.U_hat[i], self.u_tilde[i],
            )
            for row in zip(*columns, strict=True):
                yield (float(t), *(float(v) for v in row))


def _point(
    rep: Reparametrization,
    reduced: ReducedSolution,
    region: RegionSpec,
    t: float,
    r: float,
    qhat: float | None = None,
    both_routes: bool = True,
) -> PointValue:
    if qhat is None:
        qhat = solve_ray(rep, reduced.G, region, t, r).qhat
    qtilde = rep.F_hat(qhat)
    eps = region.epsilon
    if eps == 0.0 or r - t > region.R:
        return PointValue(qhat, qtilde, 0.0, 0.0, 0.0)
    s = float(region.s_of_t(t))
    u_tilde_big = eval_U(reduced, s, qtilde)
    u_hat_big = U_hat(rep, reduced, s, qhat) if both_routes else u_tilde_big
    return PointValue(qhat, qtilde, u_tilde_big, u_hat_big, eps * u_tilde_big / r)


def build_utilde(
    rep: Reparametrization,
    reduced: ReducedSolution,
    table: QhatTable,
    region: RegionSpec,
    pool: WorkerPool | None = None,
) -> ApproxSolution:
    """Evaluate u_tilde by both routes at every q_hat grid point"""
    if rep.reduced is None:
        raise CoverageError("the reparametrization carries no reduced tables")
    pool = pool or WorkerPool(max_workers=1, name="utilde")
    points = [
        (float(t), float(r), float(q))
        for i, t in enumerate(table.times)
        for r, q in zip(table.r[i], table.qhat[i], strict=True)
    ]
    values = pool.map_ordered(lambda p: _point(rep, reduced, region, p[0], p[1], qhat=p[2]), points)

    cols: dict[str, list[np.ndarray]] = {"qtilde": [], "U_tilde": [], "U_hat": [], "u_tilde": []}
    k = 0
    for i in range(table.times.size):
        n = table.r[i].size
        chunk = values[k : k + n]
        k += n
        for name in cols:
            cols[name].append(np.array([getattr(v, name) for v in chunk]))
    approx = ApproxSolution(
        rep, reduced, region, table, *(tuple(cols[name]) for name in ("qtilde", "U_tilde", "U_hat", "u_tilde"))
    )
    defect = approx.route_defect()
    if defect > ROUTE_TOL:
        logger.warning(f"u_tilde evaluation routes disagree by {defect:.3g}")
    logger.info(f"Built u_tilde on {len(points)} grid points (route defect {defect:.3g})")
    return approx


def approx_from_rows(rows, rep: Reparametrization, reduced: ReducedSolution, region: RegionSpec) -> ApproxSolution:
    """Rebuild an ApproxSolution from APPROX_COLUMNS rows"""
    table = np.asarray([tuple(float(v) for v in row) for row in rows], dtype=float).reshape(-1, len(APPROX_COLUMNS))
    times = np.unique(table[:, 0])
    per_time = [table[table[:, 0] == t] for t in times]

    def column(j: int) -> tuple[np.ndarray, ...]:
        return tuple(block[:, j].copy() for block in per_time)

    qhat_table = QhatTable(times, column(1), column(2), column(3), column(4))
    return ApproxSolution(rep, reduced, region, qhat_table, column(5), column(6), column(7), column(8))

"""Scattering data (A, A1, A2) as limits along the asymptotic profile.

  A  = -lim (mu U_q) / 2
  A1 = lim exp(G A s / 2) mu
  A2 = lim exp(-G A s / 2) U_q
"""

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from app.asymptotics.limits import LimitFit, fit_limit
from app.asymptotics.profile import AsymptoticProfile
from app.core.errors import ArtifactError
from app.core.worker_pool import WorkerPool
from app.reduced.solution import ReducedSolution
from config.logging_config import get_logger

logger = get_logger(__name__)

SCATTERING_COLUMNS = ("q", "A", "A_err", "A1", "A1_err", "A2", "A2_err", "gamma_fit")


@dataclass(frozen=True)
class NodeScattering:
    q: float
    A: LimitFit
    A1: LimitFit
    A2: LimitFit


@dataclass(frozen=True, eq=False)
class ScatteringData:
    """Per-node scattering data with extraction errors"""

    q: np.ndarray
    A: np.ndarray
    A_err: np.ndarray
    A1: np.ndarray
    A1_err: np.ndarray
    A2: np.ndarray
    A2_err: np.ndarray
    gamma_fit: np.ndarray
    G: float
    R: float
    omega: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 1.0]))

    def product_defect(self) -> np.ndarray:
        """|A1 A2 + 2A| per node"""
        return np.abs(self.A1 * self.A2 + 2.0 * self.A)

    def product_tolerance(self) -> np.ndarray:
        """First-order propagation of the extraction errors into A1 A2 + 2A"""
        return np.abs(self.A2) * self.A1_err + np.abs(self.A1) * self.A2_err + 2.0 * self.A_err

    def to_reduced(self) -> ReducedSolution:
        return ReducedSolution(self.q, self.A1, self.A2, self.G, self.R, self.omega)

    def rows(self):
        for row in zip(
            self.q, self.A, self.A_err, self.A1, self.A1_err, self.A2, self.A2_err, self.gamma_fit,
            strict=True,
        ):
            yield tuple(float(v) for v in row)


def _extract_node(profile: AsymptoticProfile, G: float, j: int) -> NodeScattering:
    q = float(profile.q[j])
    t = profile.t
    s = profile.s
    mu = profile.mu[:, j]
    uq = profile.U_q[:, j]
    product = fit_limit(t, mu * uq, quantity="A")
    A = -0.5 * product.limit
    A_fit = LimitFit(A, product.gamma, -0.5 * product.amplitude, 0.5 * product.error, product.residual, product.n_points)
    weight = np.exp(0.5 * G * A * s)
    A1 = fit_limit(t, weight * mu, quantity="A1")
    A2 = fit_limit(t, uq / weight, quantity="A2")
    return NodeScattering(q, A_fit, A1, A2)


def extract_scattering(profile: AsymptoticProfile, G: float, pool: WorkerPool | None = None) -> ScatteringData:
    """Fit A, A1, A2 at every q node; nodes are independent and run on ``pool``"""
    pool = pool or WorkerPool(max_workers=1, name="extract")
    nodes = pool.map_ordered(lambda j: _extract_node(profile, G, j), range(profile.n_nodes))

    def column(attr: str, part: str) -> np.ndarray:
        return np.array([getattr(getattr(n, attr), part) for n in nodes])

    data = ScatteringData(
        q=profile.q.copy(),
        A=column("A", "limit"),
        A_err=column("A", "error"),
        A1=column("A1", "limit"),
        A1_err=column("A1", "error"),
        A2=column("A2", "limit"),
        A2_err=column("A2", "error"),
        gamma_fit=column("A", "gamma"),
        G=G,
        R=profile.R,
        omega=profile.omega,
    )
    logger.info(f"Extracted scattering data at {profile.n_nodes} nodes (G={G:g})")
    return data


def write_scattering_csv(data: ScatteringData, path: str | Path) -> None:
    try:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(SCATTERING_COLUMNS)
            writer.writerows(tuple(f"{v:.17g}" for v in row) for row in data.rows())
    except OSError as e:
        raise ArtifactError(f"cannot write {path}: {e}") from e


def read_scattering_csv(path: str | Path, G: float, R: float) -> ScatteringData:
    try:
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
    except OSError as e:
        raise ArtifactError(f"cannot read {path}: {e}") from e
    cols = {name: np.array([float(r[name]) for r in rows]) for name in SCATTERING_COLUMNS}
    return ScatteringData(G=G, R=R, **cols)

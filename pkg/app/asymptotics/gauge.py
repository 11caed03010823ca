"""Gauge independence of A under a change of initialization cone.

For two regions built on the same field, q_bar(s, q) is the second optical
function evaluated where the first equals q. Its limit q_bar_inf(q) maps
nodes of the first run to the second, and A(q) = A_bar(q_bar_inf(q)).
"""

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import PchipInterpolator

from app.asymptotics.limits import fit_limit
from app.asymptotics.scattering import ScatteringData
from app.core.errors import CoverageError, FitError
from app.geodesics.region import RegionSpec
from app.geodesics.sheet import OpticalSheet
from config.logging_config import get_logger

logger = get_logger(__name__)

GAUGE_COLUMNS = ("q", "qbar_inf", "qbar_err", "A", "Abar", "defect")


@dataclass(frozen=True)
class GaugeRun:
    """One optical-function gauge: region, sheet and extracted data"""

    region: RegionSpec
    data: ScatteringData
    sheet: OpticalSheet


@dataclass(frozen=True, eq=False)
class GaugeComparison:
    q: np.ndarray
    qbar_inf: np.ndarray
    qbar_err: np.ndarray
    A: np.ndarray
    Abar: np.ndarray

    @property
    def defect(self) -> np.ndarray:
        return np.abs(self.A - self.Abar)

    def rows(self):
        for row in zip(self.q, self.qbar_inf, self.qbar_err, self.A, self.Abar, self.defect, strict=True):
            yield tuple(float(v) for v in row)


def _common_times(a: OpticalSheet, b: OpticalSheet) -> np.ndarray:
    common = [t for t in a.times if np.any(np.abs(b.times - t) <= 1e-9 * max(1.0, t))]
    return np.asarray(common, dtype=float)


def _a_interpolant(data: ScatteringData):
    inner = PchipInterpolator(data.q, data.A, extrapolate=False)

    def evaluate(q: float) -> float:
        if q > data.R or q > data.q[-1]:
            return 0.0
        if q < data.q[0]:
            raise CoverageError(f"q_bar={q:.6g} below the second run's nodes")
        return float(inner(q))

    return evaluate


def gauge_compare(run1: GaugeRun, run2: GaugeRun) -> GaugeComparison:
    """|A(q) - A_bar(q_bar_inf(q))| at every node of the first run"""
    times = _common_times(run1.sheet, run2.sheet)
    if times.size < 4:
        raise CoverageError(f"the two sheets share only {times.size} diagnostic times")
    a_bar = _a_interpolant(run2.data)
    q_nodes = run1.data.q
    qbar_inf = np.empty(q_nodes.size)
    qbar_err = np.empty(q_nodes.size)
    Abar = np.empty(q_nodes.size)
    for j, q in enumerate(q_nodes):
        try:
            qbar = np.array(
                [run2.sheet.q_at(float(t), run1.sheet.r_of_q(float(t), float(q))) for t in times]
            )
            fit = fit_limit(times, qbar, quantity="qbar")
            qbar_inf[j], qbar_err[j], Abar[j] = fit.limit, fit.error, a_bar(fit.limit)
        except CoverageError:
            # node outside the overlap of the two regions
            qbar_inf[j] = qbar_err[j] = Abar[j] = np.nan
        except FitError as e:
            logger.warning(f"q_bar limit at q={float(q):.6g} not fitted: {e}")
            qbar_inf[j] = qbar_err[j] = Abar[j] = np.nan
    covered = np.isfinite(Abar)
    if not covered.any():
        raise CoverageError("the two regions share no q nodes")
    result = GaugeComparison(
        q_nodes[covered], qbar_inf[covered], qbar_err[covered], run1.data.A[covered], Abar[covered]
    )
    logger.info(
        f"Gauge comparison kappa={run1.region.kappa:g} vs {run2.region.kappa:g}: "
        f"max defect {float(np.max(result.defect)):.3g}"
    )
    return result

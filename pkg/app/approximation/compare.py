"""Decay of u, u - u_tilde and the wave-equation residual of u_tilde in the band |r - t| <= t^gamma."""

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from app.approximation.utilde import ApproxSolution
from app.core.errors import ArtifactError, ConfigError, CoverageError
from app.core.fitting import SlopeFit, decay_exponent
from app.geodesics.region import RegionSpec
from app.geodesics.sheet import OpticalSheet
from app.wave.field import SolutionField
from config.logging_config import get_logger

logger = get_logger(__name__)

DECAY_COLUMNS = ("t", "sup_u", "sup_diff", "sup_residual", "band_halfwidth")
PDEFECT_COLUMNS = ("t", "sup_p_weighted")
RESIDUAL_DELTA = 0.05
# fourth-order central second-derivative weights on offsets -2..2
_D2 = np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0
_OFFSETS = np.arange(-2, 3)


def band_grid(
    fld: SolutionField, region: RegionSpec, times, gamma: float, q_min: float = -np.inf
) -> dict[float, np.ndarray]:
    """Stored radial nodes of each slice inside the band and inside the region, with r - t >= q_min"""
    if not 0.0 < gamma < 1.0:
        raise ConfigError(f"gamma must lie in (0, 1), got {gamma}")
    grid = {}
    for t in times:
        i = fld.slice_index(float(t))
        if i is None:
            raise CoverageError(f"no stored field slice at t={t:.6g}")
        r = fld.r_grid(i)
        keep = (np.abs(r - t) <= float(t) ** gamma) & (r > region.cone_radius(t)) & (r - t >= q_min)
        grid[float(fld.times[i])] = r[keep]
    return grid


@dataclass(frozen=True, eq=False)
class DecayReport:
    t: np.ndarray
    sup_u: np.ndarray
    sup_diff: np.ndarray
    sup_residual: np.ndarray
    band_halfwidth: np.ndarray
    fits: dict[str, SlopeFit]

    @property
    def exponent_gap(self) -> float:
        """decay exponent of sup|u - u_tilde| minus that of sup|u|"""
        return self.fits["sup_diff"].slope - self.fits["sup_u"].slope

    def rows(self):
        for row in zip(self.t, self.sup_u, self.sup_diff, self.sup_residual, self.band_halfwidth, strict=True):
            yield tuple(float(v) for v in row)


def utilde_residual(approx: ApproxSolution, fld: SolutionField, t: float, r: float, delta: float = RESIDUAL_DELTA) -> float:
    """-(w_tt - c(u)^2 w_rr) / r for w = r u_tilde, by five-point differences"""
    w_t = np.array([r * approx.evaluate(t + k * delta, r) for k in _OFFSETS])
    w_r = np.array([(r + k * delta) * approx.evaluate(t, r + k * delta) for k in _OFFSETS])
    w_tt = float(_D2 @ w_t) / delta**2
    w_rr = float(_D2 @ w_r) / delta**2
    c = float(fld.wave_speed(w_t[2] / r))
    return -(w_tt - c * c * w_rr) / r


def compare(
    fld: SolutionField,
    approx: ApproxSolution,
    gamma: float = 0.5,
    residual_stride: int = 4,
    delta: float = RESIDUAL_DELTA,
    t_fit_min: float | None = None,
) -> DecayReport:
    """Band sups of |u|, |u - u_tilde| and the residual of u_tilde per diagnostic time.

    The band is the grid u_tilde was built on (see band_grid).
    """
    if not 0.0 < gamma < 1.0:
        raise ConfigError(f"gamma must lie in (0, 1), got {gamma}")
    region = approx.region
    times = approx.times
    sup_u, sup_diff, sup_res, half = (np.zeros(times.size) for _ in range(4))
    for i, t in enumerate(times):
        r = approx.table.r[i]
        half[i] = t**gamma
        if r.size == 0:
            logger.warning(f"empty band at t={t:.6g}")
            continue
        u = np.atleast_1d(fld.sample(t, r).u)
        u_tilde = approx.u_tilde[i]
        sup_u[i] = float(np.max(np.abs(u)))
        sup_diff[i] = float(np.max(np.abs(u - u_tilde)))
        if region.epsilon > 0.0:
            picks = r[:: max(1, residual_stride)]
            sup_res[i] = max(abs(utilde_residual(approx, fld, t, float(ri), delta)) for ri in picks)

    fits = {
        name: decay_exponent(times, values, quantity=name, t_min=t_fit_min)
        for name, values in (("sup_u", sup_u), ("sup_diff", sup_diff), ("sup_residual", sup_res))
    }
    report = DecayReport(times, sup_u, sup_diff, sup_res, half, fits)
    logger.info(
        f"Band comparison gamma={gamma:g}: exponents u {fits['sup_u'].slope:.3f}, "
        f"u - u_tilde {fits['sup_diff'].slope:.3f}, residual {fits['sup_residual'].slope:.3f}"
    )
    return report


def reparam_defect(sheet: OpticalSheet, approx: ApproxSolution, gamma: float = 0.5) -> tuple[np.ndarray, np.ndarray, SlopeFit]:
    """sup over the band of |F(q) - q_hat| / <r - t> on the q_hat grid; returns (t, sup, decay fit)"""
    times, sups = [], []
    for i, t in enumerate(approx.times):
        r = approx.table.r[i]
        keep = np.abs(r - t) <= t**gamma
        if not keep.any():
            continue
        try:
            sl = sheet.slice_at(float(t))
        except CoverageError:
            continue
        covered = keep & (r >= sl.r[0])
        if not covered.any():
            continue
        q = np.array([sl.q_at(float(ri)) for ri in r[covered]])
        p = approx.rep.F_of(q) - approx.table.qhat[i][covered]
        times.append(float(t))
        sups.append(float(np.max(np.abs(p) / np.sqrt(1.0 + (r[covered] - t) ** 2))))
    if not times:
        raise CoverageError("the optical sheet covers none of the q_hat grid")
    t_arr, sup_arr = np.asarray(times), np.asarray(sups)
    return t_arr, sup_arr, decay_exponent(t_arr, sup_arr, quantity="p_defect")


def write_decay_csv(report: DecayReport, path: str | Path) -> None:
    try:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(DECAY_COLUMNS)
            writer.writerows(tuple(f"{v:.17g}" for v in row) for row in report.rows())
    except OSError as e:
        raise ArtifactError(f"cannot write {path}: {e}") from e

"""Optical function q(t, r) assembled from traced characteristics.

At every diagnostic time the characteristics reaching that time are ordered by
their q-value z; their radii must be ordered the same way. Between curves q is
the monotone cubic interpolant of z against r; beyond the outermost curve
(r - t >= 2R, where u vanishes) q = r - t.
"""

import math
import time
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.optimize import brentq

from app.core.errors import CoverageError, CrossingError
from app.core.worker_pool import WorkerPool
from app.geodesics.characteristics import (
    DEFAULT_NULL_TOL,
    DEFAULT_RTOL,
    Bicharacteristic,
    trace,
)
from app.geodesics.region import RegionSpec, Seed
from app.metric.family import MetricFamily
from app.wave.field import RadialField
from config.logging_config import get_logger, log_performance

logger = get_logger(__name__)

SHEET_COLUMNS = ("t", "r", "q", "q_t", "q_r", "mu", "nu")
CHARACTERISTIC_COLUMNS = ("z", "t", "r", "q_t", "q_r", "null_residual")


@dataclass(frozen=True)
class SheetSlice:
    """Characteristic data at one time, sorted by increasing r (and z)"""

    t: float
    r: np.ndarray
    z: np.ndarray
    q_t: np.ndarray
    q_r: np.ndarray

    @property
    def r_min(self) -> float:
        return float(self.r[0])

    @property
    def r_max(self) -> float:
        return float(self.r[-1])

    @cached_property
    def _q_of_r(self) -> PchipInterpolator:
        return PchipInterpolator(self.r, self.z, extrapolate=False)

    @cached_property
    def _qt_of_r(self) -> PchipInterpolator:
        return PchipInterpolator(self.r, self.q_t, extrapolate=False)

    @cached_property
    def _qr_of_r(self) -> PchipInterpolator:
        return PchipInterpolator(self.r, self.q_r, extrapolate=False)

    def _check(self, r: np.ndarray):
        if np.any(r < self.r_min - 1e-12 * max(1.0, self.r_min)):
            raise CoverageError(
                f"r={float(r.min()):.6g} below the innermost characteristic "
                f"r={self.r_min:.6g} at t={self.t:.6g}"
            )

    def q_at(self, r):
        """q(t, r); q = r - t beyond the outermost characteristic"""
        scalar = np.ndim(r) == 0
        r = np.atleast_1d(np.asarray(r, dtype=float))
        self._check(r)
        r_in = np.clip(r, self.r_min, self.r_max)
        q = np.where(r > self.r_max, r - self.t, self._q_of_r(r_in))
        return float(q[0]) if scalar else q

    def gradient_at(self, r) -> tuple[np.ndarray, np.ndarray]:
        """(q_t, q_r) carried by the characteristic momenta, interpolated in r"""
        r = np.atleast_1d(np.asarray(r, dtype=float))
        self._check(r)
        r_in = np.clip(r, self.r_min, self.r_max)
        outside = r > self.r_max
        q_t = np.where(outside, -1.0, self._qt_of_r(r_in))
        q_r = np.where(outside, 1.0, self._qr_of_r(r_in))
        return q_t, q_r

    def r_of_q(self, q: float) -> float:
        """Monotone inversion of q(t, .)"""
        if q >= self.z[-1]:
            return self.t + q
        if q < self.z[0]:
            raise CoverageError(
                f"q={q:.6g} below the smallest traced value {self.z[0]:.6g} at t={self.t:.6g}"
            )
        j = int(np.searchsorted(self.z, q, side="right"))
        j = min(max(j, 1), self.z.size - 1)
        a, b = float(self.r[j - 1]), float(self.r[j])
        if q == self.z[j - 1]:
            return a
        return brentq(lambda x: float(self._q_of_r(x)) - q, a, b, xtol=1e-12, rtol=4 * np.finfo(float).eps)

    def grid(self, dr: float, extension: float) -> np.ndarray:
        """Tabulation nodes r_min + k dr up to t + 2R + extension"""
        upper = self.r_max + extension
        n = int(math.floor((upper - self.r_min) / dr + 1e-9))
        return self.r_min + dr * np.arange(n + 1)


@dataclass
class OpticalSheet:
    """q, q_t, q_r at the diagnostic times, from a family of characteristics"""

    region: RegionSpec
    times: np.ndarray
    slices: dict[float, SheetSlice]
    curves: list[Bicharacteristic] = field(default_factory=list)
    stencil_dt: float | None = None
    # recorded residual when the sheet is read back without its curves
    recorded_null_residual: float = 0.0

    def slice_at(self, t: float) -> SheetSlice:
        for key, sl in self.slices.items():
            if abs(key - t) <= 1e-9 * max(1.0, abs(t)):
                return sl
        raise CoverageError(f"no sheet slice at t={t:.6g}")

    def q_at(self, t: float, r):
        return self.slice_at(t).q_at(r)

    def r_of_q(self, t: float, q: float) -> float:
        return self.slice_at(t).r_of_q(q)

    def max_null_residual(self) -> float:
        return max((c.max_null_residual for c in self.curves), default=self.recorded_null_residual)

    def rows(self, dr: float = 0.05, extension: float = 1.0):
        """CSV rows t, r, q, q_t, q_r, mu, nu on each diagnostic slice"""
        for t in self.times:
            sl = self.slice_at(t)
            r = sl.grid(dr, extension)
            q = sl.q_at(r)
            q_t, q_r = sl.gradient_at(r)
            for row in zip(r, q, q_t, q_r, q_t - q_r, q_t + q_r, strict=True):
                yield (float(t), *row)

    def characteristic_rows(self):
        """CSV rows z, t, r, q_t, q_r, null_residual for every curve sample"""
        for curve in self.curves:
            q_r = curve.q_r
            r = curve.r
            for i in range(curve.t.size):
                yield (curve.z, curve.t[i], r[i], curve.p[i, 0], q_r[i], curve.null_residual[i])


def assemble_sheet(
    curves: list[Bicharacteristic],
    region: RegionSpec,
    diag_times,
    stencil_dt: float | None = None,
) -> OpticalSheet:
    """Merge traced curves into per-time slices, checking that they never cross"""
    diag_times = np.asarray(sorted(diag_times), dtype=float)
    sample_times = list(diag_times)
    if stencil_dt:
        sample_times += [t + d for t in diag_times for d in (-stencil_dt, stencil_dt)]
    slices = {}
    for t in sorted(sample_times):
        entries = []
        for curve in curves:
            if curve.seed.t > t + 1e-12:
                continue
            try:
                i = curve.index_of(t)
            except KeyError:
                continue
            entries.append((curve.z, curve.r[i], curve.p[i, 0], curve.q_r[i]))
        if len(entries) < 2:
            raise CoverageError(f"fewer than two characteristics reach t={t:.6g}")
        entries.sort(key=lambda e: e[0])
        z, r, q_t, q_r = (np.array(col) for col in zip(*entries, strict=True))
        bad = np.flatnonzero(np.diff(r) <= 0.0)
        if bad.size:
            j = int(bad[0])
            raise CrossingError(
                f"characteristics z={z[j]:.4g} and z={z[j + 1]:.4g} cross before t={t:.6g} "
                f"(r={r[j]:.10g} >= {r[j + 1]:.10g})"
            )
        slices[float(t)] = SheetSlice(float(t), r, z, q_t, q_r)
    return OpticalSheet(region, diag_times, slices, list(curves), stencil_dt)


def build_sheet(
    fam: MetricFamily,
    fld: RadialField,
    region: RegionSpec,
    seeds: list[Seed],
    diag_times,
    pool: WorkerPool | None = None,
    rtol: float = DEFAULT_RTOL,
    null_tol: float = DEFAULT_NULL_TOL,
    stencil_dt: float | None = None,
) -> OpticalSheet:
    """Trace every seed through the diagnostic times and assemble the sheet.

    Traces run on ``pool``; the merge is sequential and in seed order.
    """
    start = time.time()
    diag_times = np.asarray(sorted(diag_times), dtype=float)
    samples = list(diag_times)
    if stencil_dt:
        samples += [t + d for t in diag_times for d in (-stencil_dt, stencil_dt)]
    samples = sorted(samples)
    t_last = samples[-1]
    live = [s for s in seeds if s.t <= t_last]
    pool = pool or WorkerPool(max_workers=1, name="trace")

    def run(seed: Seed) -> Bicharacteristic:
        return trace(fam, fld, region, seed, samples, rtol=rtol, null_tol=null_tol)

    curves = pool.map_ordered(run, live)
    sheet = assemble_sheet(curves, region, diag_times, stencil_dt)
    log_performance(
        logger,
        "build_sheet",
        (time.time() - start) * 1000,
        curves=len(curves),
        diag_times=len(diag_times),
    )
    return sheet


def optical_bounds(sheet: OpticalSheet) -> list[dict[str, float]]:
    """Per diagnostic time: min q_r, max q_t, sup |nu| and sup |q - (r - t)| on the curves"""
    bounds = []
    for t in sheet.times:
        sl = sheet.slice_at(t)
        bounds.append(
            {
                "t": float(t),
                "min_q_r": float(np.min(sl.q_r)),
                "max_q_t": float(np.max(sl.q_t)),
                "sup_nu": float(np.max(np.abs(sl.q_t + sl.q_r))),
                "sup_shift": float(np.max(np.abs(sl.z - (sl.r - t)))),
            }
        )
    return bounds


def eikonal_residual(
    sheet: OpticalSheet,
    fam: MetricFamily,
    fld: RadialField,
    dr: float = 0.05,
) -> list[dict[str, float]]:
    """sup |g^{ab}(u) q_a q_b| with q_t, q_r from centered differences of the tabulated q.

    Requires a sheet built with ``stencil_dt``.
    """
    if not sheet.stencil_dt:
        raise CoverageError("eikonal residual needs a sheet traced with stencil_dt")
    dt = sheet.stencil_dt
    e_r = np.array([0.0, 0.0, 1.0])
    out = []
    for t in sheet.times:
        sl = sheet.slice_at(t)
        before, after = sheet.slice_at(t - dt), sheet.slice_at(t + dt)
        lo = max(sl.r_min, before.r_min, after.r_min) + dr
        hi = sl.r_max
        if hi <= lo:
            raise CoverageError(f"no interior nodes for the eikonal residual at t={t:.6g}")
        r = np.arange(lo, hi, dr)
        q_t = (after.q_at(r) - before.q_at(r)) / (2.0 * dt)
        q_r = (sl.q_at(r + dr) - sl.q_at(r - dr)) / (2.0 * dr)
        u = np.atleast_1d(fld.sample(t, r).u)
        residual = np.empty_like(r)
        for j in range(r.size):
            p = np.concatenate(([q_t[j]], q_r[j] * e_r))
            residual[j] = p @ fam.inverse(float(u[j])) @ p
        out.append({"t": float(t), "sup_residual": float(np.max(np.abs(residual)))})
    return out


def sheet_from_rows(rows, region: RegionSpec, diag_times, stencil_dt: float | None = None) -> OpticalSheet:
    """Rebuild a sheet from CHARACTERISTIC_COLUMNS rows (z, t, r, q_t, q_r, null_residual)"""
    table = np.asarray([tuple(float(v) for v in row) for row in rows], dtype=float).reshape(-1, 6)
    diag_times = np.asarray(sorted(diag_times), dtype=float)
    sample_times = list(diag_times)
    if stencil_dt:
        sample_times += [t + d for t in diag_times for d in (-stencil_dt, stencil_dt)]
    slices = {}
    for t in sorted(sample_times):
        at_t = table[np.abs(table[:, 1] - t) <= 1e-9 * max(1.0, t)]
        if at_t.shape[0] < 2:
            raise CoverageError(f"fewer than two characteristics recorded at t={t:.6g}")
        at_t = at_t[np.argsort(at_t[:, 0], kind="stable")]
        if np.any(np.diff(at_t[:, 2]) <= 0.0):
            raise CrossingError(f"recorded characteristics cross before t={t:.6g}")
        slices[float(t)] = SheetSlice(float(t), at_t[:, 2], at_t[:, 0], at_t[:, 3], at_t[:, 4])
    residual = float(np.max(np.abs(table[:, 5]))) if table.size else 0.0
    return OpticalSheet(region, diag_times, slices, [], stencil_dt, residual)

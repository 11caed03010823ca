import time

import numpy as np

from app.core.worker_pool import WorkerPool
from app.frames.chi import DEFAULT_STENCIL_OFFSET, FrameBundle, second_fundamental_form, trace_bundle
from app.frames.curvature import DERIVATIVE_STEP, TIME_MATCH_TOL, derivative_times, raychaudhuri_residual
from app.frames.null_frame import DEFAULT_FRAME_TOL, FrameRecord, transport
from app.geodesics.characteristics import DEFAULT_NULL_TOL, DEFAULT_RTOL
from app.geodesics.region import RegionSpec, Seed
from app.metric.family import MetricFamily
from app.wave.field import RadialField
from config.logging_config import get_logger, log_performance

logger = get_logger(__name__)


def analyze_bundle(
    fam: MetricFamily,
    fld: RadialField,
    bundle: FrameBundle,
    t_samples=None,
    step: float = DERIVATIVE_STEP,
    rtol: float = DEFAULT_RTOL,
    frame_tol: float = DEFAULT_FRAME_TOL,
) -> FrameRecord:
    """Transported frame, chi and Raychaudhuri defect along the bundle centre.

    The bundle is traced on the d/dt stencil times; with ``t_samples`` the
    result keeps only the seed row and those samples.
    """
    record = transport(fam, fld, bundle.center, rtol=rtol, frame_tol=frame_tol, basis_angle=bundle.basis_angle)
    chi, asym = second_fundamental_form(fam, fld, record, bundle.neighbors, bundle.offset)
    record = record.with_chi(chi, asym)
    record = record.with_raychaudhuri(raychaudhuri_residual(fam, fld, record, step))
    if t_samples is None:
        return record
    t_samples = np.asarray(t_samples, dtype=float)
    on_sample = np.any(np.abs(record.t[:, None] - t_samples[None, :]) <= TIME_MATCH_TOL, axis=1)
    on_sample[0] = True
    return record.select(np.flatnonzero(on_sample))


def analyze_frames(
    fam: MetricFamily,
    fld: RadialField,
    region: RegionSpec,
    seeds: list[Seed],
    t_samples,
    pool: WorkerPool | None = None,
    offset: float = DEFAULT_STENCIL_OFFSET,
    basis_angle: float = 0.0,
    step: float = DERIVATIVE_STEP,
    rtol: float = DEFAULT_RTOL,
    null_tol: float = DEFAULT_NULL_TOL,
    frame_tol: float = DEFAULT_FRAME_TOL,
) -> list[FrameRecord]:
    """One bundle per seed; each bundle is owned by a single worker"""
    start = time.time()
    t_samples = np.asarray(sorted(t_samples), dtype=float)
    traced_times = derivative_times(t_samples, step)
    pool = pool or WorkerPool(max_workers=1, name="frames")

    def run(seed: Seed) -> FrameRecord:
        bundle = trace_bundle(
            fam, fld, region, seed, traced_times, offset=offset, basis_angle=basis_angle,
            rtol=rtol, null_tol=null_tol,
        )
        return analyze_bundle(fam, fld, bundle, t_samples, step=step, rtol=rtol, frame_tol=frame_tol)

    records = pool.map_ordered(run, [s for s in seeds if s.t <= t_samples[-1]])
    log_performance(logger, "analyze_frames", (time.time() - start) * 1000, bundles=len(records))
    return records


def frame_sample_times(t_start: float, t_end: float, dt: float) -> np.ndarray:
    """Uniform sample times for frame records"""
    n = int(np.floor((t_end - t_start) / dt + 1e-9))
    return t_start + dt * np.arange(n + 1)


def chi_deviation(record: FrameRecord) -> np.ndarray:
    """max_ab |chi_ab - delta_ab / r| per sample"""
    if record.chi is None:
        return np.full(record.t.size, np.nan)
    round_sphere = np.einsum("n,ab->nab", 1.0 / record.r, np.eye(2))
    return np.max(np.abs(record.chi - round_sphere), axis=(1, 2))

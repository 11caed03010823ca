"""Riemann tensor of g(u) and the Raychaudhuri defect of chi along e4."""

import numpy as np

from app.core.errors import StencilError
from app.frames.null_frame import FrameRecord
from app.metric.family import MetricFamily, christoffel, christoffel_derivative
from app.wave.field import RadialField

# half-width of the five-point d/dt stencil placed around each frame sample
DERIVATIVE_STEP = 0.1
# stencil times are matched against record times to this tolerance
TIME_MATCH_TOL = 1e-8
_STENCIL = ((-2, 1.0), (-1, -8.0), (1, 8.0), (2, -1.0))


def riemann_lower(fam: MetricFamily, u: float, du, ddu) -> np.ndarray:
    """R_{abmn} = g_{sn} (d_a Gamma^s_{bm} - d_b Gamma^s_{am} + Gamma^d_{bm} Gamma^s_{ad} - Gamma^d_{am} Gamma^s_{bd})"""
    gamma = christoffel(fam, u, du)
    d_gamma = christoffel_derivative(fam, u, du, ddu)
    upper = (
        np.einsum("asbm->abms", d_gamma)
        - np.einsum("bsam->abms", d_gamma)
        + np.einsum("dbm,sad->abms", gamma, gamma)
        - np.einsum("dam,sbd->abms", gamma, gamma)
    )
    return np.einsum("abms,sn->abmn", upper, fam.lower(u))


def curvature_term(fam: MetricFamily, fld: RadialField, t: float, x, e4, e) -> np.ndarray:
    """<R(e4, e_a) e4, e_b> as a 2 x 2 matrix"""
    x = np.asarray(x, dtype=float)
    sample = fld.sample(t, float(np.linalg.norm(x)))
    riemann = riemann_lower(fam, float(sample.u), sample.gradient(x), sample.hessian(x))
    return np.einsum("i,aj,k,bl,ijkl->ab", e4, e, e4, e, riemann)


def derivative_times(t_samples, step: float = DERIVATIVE_STEP) -> np.ndarray:
    """Sample times together with the t +- step, t +- 2 step points of their d/dt stencils"""
    if step <= 0.0:
        raise StencilError(f"derivative step must be positive, got {step}")
    t_samples = np.asarray(t_samples, dtype=float)
    if t_samples.size == 0:
        return t_samples
    grid = np.sort((t_samples[:, None] + step * np.arange(-2, 3)[None, :]).ravel())
    grid = grid[np.concatenate([[True], np.diff(grid) > TIME_MATCH_TOL])]
    # sample times stay exact where a stencil point lands on them
    near = np.abs(grid[:, None] - t_samples[None, :]) <= TIME_MATCH_TOL
    hit = near.any(axis=1)
    grid[hit] = t_samples[near.argmax(axis=1)[hit]]
    return grid


def _locate(t: np.ndarray, target: float) -> int | None:
    i = int(np.searchsorted(t, target - TIME_MATCH_TOL))
    if i < t.size and abs(t[i] - target) <= TIME_MATCH_TOL:
        return i
    return None


def chi_derivative(t: np.ndarray, chi: np.ndarray, step: float = DERIVATIVE_STEP) -> np.ndarray:
    """Fourth-order d/dt of chi at every record time.

    Uses (f(-2h) - 8 f(-h) + 8 f(h) - f(2h)) / 12h; rows whose four stencil
    times are not all on the record are NaN.
    """
    t = np.asarray(t, dtype=float)
    d_chi = np.full(chi.shape, np.nan)
    for i, ti in enumerate(t):
        idx = [_locate(t, ti + k * step) for k, _ in _STENCIL]
        if any(j is None for j in idx):
            continue
        d_chi[i] = sum(w * chi[j] for j, (_, w) in zip(idx, _STENCIL)) / (12.0 * step)
    return d_chi


def raychaudhuri_residual(
    fam: MetricFamily, fld: RadialField, record: FrameRecord, step: float = DERIVATIVE_STEP
) -> np.ndarray:
    """Per-sample defect of e4(chi) + chi chi - Gamma^0(e4, e4) chi - <R(e4, e_a) e4, e_b>.

    e4 has unit time component, so e4(chi_ab) is d/dt along the curve. The
    record must carry the stencil times from ``derivative_times``. The defect
    is the largest entry of the 2 x 2 defect matrix; samples without a full
    stencil are NaN.
    """
    if record.chi is None:
        raise StencilError("raychaudhuri residual needs chi on the record")
    if record.t.size < 5:
        raise StencilError(f"need at least 5 samples, got {record.t.size}")
    t = record.t
    chi = record.chi
    d_chi = chi_derivative(t, chi, step)
    defect = np.full(t.size, np.nan)
    for i in np.flatnonzero(np.isfinite(d_chi[:, 0, 0])):
        x = record.x[i]
        sample = fld.sample(t[i], float(np.linalg.norm(x)))
        gamma = christoffel(fam, float(sample.u), sample.gradient(x))
        e4 = record.e4[i]
        gamma0 = float(e4 @ gamma[0] @ e4)
        curv = curvature_term(fam, fld, t[i], x, e4, record.e[i])
        lhs = d_chi[i] + chi[i] @ chi[i] - gamma0 * chi[i] - curv
        defect[i] = float(np.max(np.abs(lhs)))
    return defect

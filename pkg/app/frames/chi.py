"""Second fundamental form chi_ab = <D_a e4, e_b> from a five-curve stencil.

The four neighbours of a centre characteristic start on the same H-sphere
with omega rotated by +-offset along two tangent directions, so at equal t
they lie on the same sphere S_{t,q} as the centre. Tangential derivatives of
e4 come from centered differences across the stencil.
"""

import math
from dataclasses import dataclass

import numpy as np

from app.core.errors import DegenerateError, StencilError
from app.frames.null_frame import FrameRecord, null_generator, sphere_tangents
from app.geodesics.characteristics import DEFAULT_NULL_TOL, DEFAULT_RTOL, Bicharacteristic, trace
from app.geodesics.region import RegionSpec, Seed
from app.metric.family import Direction, MetricFamily, christoffel
from app.wave.field import RadialField

DEFAULT_STENCIL_OFFSET = 1e-2


@dataclass(frozen=True)
class FrameBundle:
    """Centre characteristic plus its neighbours ordered (+t1, -t1, +t2, -t2)"""

    center: Bicharacteristic
    neighbors: tuple[Bicharacteristic, ...]
    offset: float
    basis_angle: float = 0.0


def stencil_seeds(seed: Seed, offset: float = DEFAULT_STENCIL_OFFSET, basis_angle: float = 0.0) -> list[Seed]:
    """Rotated copies of ``seed`` on its H-sphere, ordered (+t1, -t1, +t2, -t2)"""
    omega = seed.direction.omega
    seeds = []
    for tangent in sphere_tangents(omega, basis_angle):
        for sign in (1.0, -1.0):
            rotated = math.cos(offset) * omega + sign * math.sin(offset) * tangent
            seeds.append(seed.rotated(Direction.from_vector(rotated)))
    return seeds


def trace_bundle(
    fam: MetricFamily,
    fld: RadialField,
    region: RegionSpec,
    seed: Seed,
    t_samples,
    offset: float = DEFAULT_STENCIL_OFFSET,
    basis_angle: float = 0.0,
    rtol: float = DEFAULT_RTOL,
    null_tol: float = DEFAULT_NULL_TOL,
) -> FrameBundle:
    center = trace(fam, fld, region, seed, t_samples, rtol=rtol, null_tol=null_tol)
    neighbors = tuple(
        trace(fam, fld, region, s, t_samples, rtol=rtol, null_tol=null_tol)
        for s in stencil_seeds(seed, offset, basis_angle)
    )
    return FrameBundle(center, neighbors, offset, basis_angle)


def _e4_at(fam: MetricFamily, fld: RadialField, curve: Bicharacteristic, i: int) -> np.ndarray:
    u = float(fld.sample(curve.t[i], float(np.linalg.norm(curve.x[i]))).u)
    return null_generator(fam.inverse(u), curve.p[i])


def second_fundamental_form(
    fam: MetricFamily,
    fld: RadialField,
    record: FrameRecord,
    neighbors: tuple[Bicharacteristic, ...],
    offset: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Symmetric part of chi_ab and |chi_12 - chi_21| at every sample of ``record``.

    chi_ab = (e_a(e4^m) + Gamma^m_{kl} e_a^k e4^l) g_{mn} e_b^n.
    """
    if len(neighbors) != 4:
        raise StencilError(f"five-curve stencil needs 4 neighbours, got {len(neighbors)}")
    for nb in neighbors:
        if nb.t.size != record.t.size or not np.allclose(nb.t, record.t, rtol=0.0, atol=1e-9):
            raise StencilError(f"neighbour of z={record.geo.z:.4g} is not sampled at matching times")

    n = record.t.size
    chi = np.empty((n, 2, 2))
    asym = np.empty(n)
    scale = 2.0 * offset
    for i in range(n):
        J = np.column_stack(
            ((neighbors[0].x[i] - neighbors[1].x[i]) / scale, (neighbors[2].x[i] - neighbors[3].x[i]) / scale)
        )
        e4_nb = [_e4_at(fam, fld, nb, i) for nb in neighbors]
        D = np.column_stack(((e4_nb[0] - e4_nb[1]) / scale, (e4_nb[2] - e4_nb[3]) / scale))
        if np.linalg.matrix_rank(J) < 2:
            raise StencilError(f"degenerate stencil at t={record.t[i]:.6g}")

        x = record.x[i]
        sample = fld.sample(record.t[i], float(np.linalg.norm(x)))
        u = float(sample.u)
        gamma = christoffel(fam, u, sample.gradient(x))
        g = fam.lower(u)
        e4 = record.e4[i]
        e = record.e[i]
        nabla = np.empty((2, 4))
        for a in range(2):
            coeffs, *_ = np.linalg.lstsq(J, e[a, 1:], rcond=None)
            nabla[a] = D @ coeffs + np.einsum("mkl,k,l->m", gamma, e[a], e4)
        raw = nabla @ g @ e.T
        chi[i] = 0.5 * (raw + raw.T)
        asym[i] = abs(raw[0, 1] - raw[1, 0])

    tr = chi[:, 0, 0] + chi[:, 1, 1]
    if np.any(tr <= 0.0):
        i = int(np.argmin(tr))
        raise DegenerateError(f"tr chi = {tr[i]:.3g} <= 0 on z={record.geo.z:.4g} at t={record.t[i]:.6g}")
    return chi, asym


def round_sphere_chi(fam: MetricFamily, fld: RadialField, t: float, r) -> np.ndarray:
    """chi_11 = chi_22 of the round sphere r = const for radial u and isotropic c(u).

    c / r - c'(u) (u_t + c u_r) / c.
    """
    sample = fld.sample(t, r)
    c = fam.wave_speed(sample.u)
    dc = fam.wave_speed_du(sample.u)
    return c / np.asarray(r, dtype=float) - dc * (sample.u_t + c * sample.u_r) / c

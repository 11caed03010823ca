"""Discrete space-time record of a radial solution and its interpolated access.

Slices hold u on r_j = j*h. Off-grid queries interpolate the weighted variable
w = r*u along outgoing null lines (comoving coordinate rho = r - t), which keeps
linear-in-time interpolation accurate across geometrically spaced slices.
"""

import threading
from dataclasses import dataclass
from typing import Protocol

import numpy as np

from app.core.errors import OutOfSlabError

_NODE_TOL = 1e-9
_GHOSTS = 4


@dataclass(frozen=True)
class FieldSample:
    """u and its derivatives up to order two in (t, r) at one time"""

    t: float
    r: np.ndarray | float
    u: np.ndarray | float
    u_t: np.ndarray | float
    u_r: np.ndarray | float
    u_tt: np.ndarray | float
    u_tr: np.ndarray | float
    u_rr: np.ndarray | float

    @classmethod
    def zeros(cls, t: float, r) -> "FieldSample":
        """All-zero sample (outside the support)"""
        z = np.zeros_like(np.asarray(r, dtype=float))
        return cls(t, r, z, z, z, z, z, z)

    def scalar(self, i: int = 0) -> "FieldSample":
        """Extract one point of a vectorized sample"""
        pick = lambda a: float(np.asarray(a).reshape(-1)[i])  # noqa: E731
        return FieldSample(
            self.t,
            pick(self.r),
            pick(self.u),
            pick(self.u_t),
            pick(self.u_r),
            pick(self.u_tt),
            pick(self.u_tr),
            pick(self.u_rr),
        )

    def gradient(self, x) -> np.ndarray:
        """d_a u in Cartesian (t, x, y, z) at spatial point x"""
        x = np.asarray(x, dtype=float)
        r = float(np.linalg.norm(x))
        omega = x / r if r > 0 else np.zeros(3)
        return np.concatenate(([float(self.u_t)], float(self.u_r) * omega))

    def hessian(self, x) -> np.ndarray:
        """d_a d_b u in Cartesian (t, x, y, z) at spatial point x"""
        x = np.asarray(x, dtype=float)
        r = float(np.linalg.norm(x))
        hess = np.zeros((4, 4))
        hess[0, 0] = float(self.u_tt)
        if r == 0.0:
            hess[1:, 1:] = float(self.u_rr) * np.eye(3)
            return hess
        omega = x / r
        outer = np.outer(omega, omega)
        hess[0, 1:] = hess[1:, 0] = float(self.u_tr) * omega
        hess[1:, 1:] = float(self.u_rr) * outer + (np.eye(3) - outer) * float(self.u_r) / r
        return hess


class RadialField(Protocol):
    """Anything the geometry stages can sample"""

    R: float
    epsilon: float

    @property
    def t_min(self) -> float: ...

    @property
    def t_max(self) -> float: ...

    def sample(self, t: float, r) -> FieldSample: ...

    def wave_speed(self, u): ...


def _lagrange_weights(s: np.ndarray) -> np.ndarray:
    # Cubic Lagrange weights on nodes -1, 0, 1, 2 for offset s in [0, 1)
    return np.stack(
        (
            -s * (s - 1.0) * (s - 2.0) / 6.0,
            (s + 1.0) * (s - 1.0) * (s - 2.0) / 2.0,
            -(s + 1.0) * s * (s - 2.0) / 2.0,
            (s + 1.0) * s * (s - 1.0) / 6.0,
        )
    )


class SolutionField:
    """Stored slices of u(t, r_j) with interpolated access up to second derivatives."""

    def __init__(
        self,
        h: float,
        k: float,
        times,
        slices: list[np.ndarray],
        R: float,
        epsilon: float = 0.0,
        c_coeffs: tuple[float, ...] = (1.0,),
        energy: np.ndarray | None = None,
    ):
        self.h = float(h)
        self.k = float(k)
        self.times = np.asarray(times, dtype=float)
        self.slices = [np.asarray(s, dtype=float) for s in slices]
        self.R = float(R)
        self.epsilon = float(epsilon)
        self.c_coeffs = tuple(c_coeffs)
        self.energy = energy
        if self.times.size == 0 or self.times.size != len(self.slices):
            raise OutOfSlabError("field needs at least one slice and one time per slice")
        if np.any(np.diff(self.times) <= 0):
            raise OutOfSlabError("slice times must be strictly increasing")
        self._cache: dict[int, tuple[np.ndarray, ...]] = {}
        self._lock = threading.Lock()

    @property
    def t_min(self) -> float:
        return float(self.times[0])

    @property
    def t_max(self) -> float:
        return float(self.times[-1])

    @property
    def n_slices(self) -> int:
        return len(self.slices)

    def wave_speed(self, u):
        """c(u) of the family the field was evolved with"""
        return np.polynomial.polynomial.polyval(u, self.c_coeffs)

    def r_grid(self, i: int) -> np.ndarray:
        """Radial nodes of slice i"""
        return self.h * np.arange(self.slices[i].size)

    def contains(self, t: float, r: float) -> bool:
        """True if (t, r) lies inside the stored slab"""
        return self.t_min <= t <= self.t_max and r >= 0.0

    def slice_index(self, t: float) -> int | None:
        """Index of the slice stored at time t, if any"""
        i = int(np.searchsorted(self.times, t))
        for j in (i - 1, i):
            if 0 <= j < self.times.size and abs(self.times[j] - t) <= 1e-12 * max(1.0, t):
                return j
        return None

    def _bracket(self, t: float) -> tuple[int, int, float]:
        if self.times.size == 1:
            return 0, 0, 0.0
        i = int(np.searchsorted(self.times, t, side="right")) - 1
        i = min(max(i, 0), self.times.size - 2)
        ta, tb = self.times[i], self.times[i + 1]
        return i, i + 1, float((t - ta) / (tb - ta))

    def _nodal(self, i: int) -> tuple[np.ndarray, ...]:
        cached = self._cache.get(i)
        if cached is not None:
            return cached
        u = self.slices[i]
        n = u.size
        r = self.h * np.arange(n)
        w = r * u
        # odd extension of w and even extension of u through the origin
        w_ext = np.zeros(n + 2 * _GHOSTS)
        w_ext[_GHOSTS : _GHOSTS + n] = w
        w_ext[:_GHOSTS] = -w[1 : _GHOSTS + 1][::-1]
        u_ext = np.zeros(n + 2 * _GHOSTS)
        u_ext[_GHOSTS : _GHOSTS + n] = u
        u_ext[:_GHOSTS] = u[1 : _GHOSTS + 1][::-1]
        arrays = []
        for f in (w_ext, u_ext):
            d1 = np.zeros_like(f)
            d2 = np.zeros_like(f)
            d1[1:-1] = (f[2:] - f[:-2]) / (2.0 * self.h)
            d2[1:-1] = (f[2:] - 2.0 * f[1:-1] + f[:-2]) / self.h**2
            arrays.extend((f, d1, d2))
        result = tuple(arrays)
        with self._lock:
            self._cache[i] = result
        return result

    def _interp(self, arr: np.ndarray, x: np.ndarray, parity: float) -> np.ndarray:
        # parity -1 for odd, +1 for even functions of r
        sign = np.where(x < 0.0, parity, 1.0)
        y = np.abs(x) / self.h
        j = np.floor(y).astype(int)
        s = y - j
        idx = j[None, :] + np.arange(-1, 3)[:, None] + _GHOSTS
        beyond = idx[-1] >= arr.size
        idx = np.minimum(idx, arr.size - 1)
        vals = np.sum(_lagrange_weights(s) * arr[idx], axis=0)
        vals = np.where(beyond, 0.0, vals)
        return sign * vals

    def sample(self, t: float, r) -> FieldSample:
        """u, u_t, u_r, u_tt, u_tr, u_rr at time t and radii r (scalar or array)."""
        t = float(t)
        scalar = np.ndim(r) == 0
        r = np.atleast_1d(np.asarray(r, dtype=float))
        tol = 1e-12 * max(1.0, abs(t))
        if t < self.t_min - tol or t > self.t_max + tol or np.any(r < 0.0):
            raise OutOfSlabError(
                f"query t={t:.6g}, r in [{r.min():.6g}, {r.max():.6g}] outside slab "
                f"[{self.t_min:.6g}, {self.t_max:.6g}] x [0, inf)"
            )
        t = min(max(t, self.t_min), self.t_max)
        out = {name: np.zeros_like(r) for name in ("u", "u_t", "u_r", "u_tt", "u_tr", "u_rr")}
        live = r < t + self.R
        far = live & (r >= 2.0 * self.h)
        near = live & ~far

        ia, ib, theta = self._bracket(t)
        ta, tb = self.times[ia], self.times[ib]
        dt = tb - ta
        if far.any():
            self._sample_comoving(t, r[far], ia, ib, theta, dt, out, far)
        if near.any():
            self._sample_origin(r[near], ia, ib, theta, dt, out, near)

        i = self.slice_index(t)
        if i is not None:
            node = np.rint(r / self.h)
            on_node = live & (np.abs(r / self.h - node) < _NODE_TOL) & (node < self.slices[i].size)
            if on_node.any():
                out["u"][on_node] = self.slices[i][node[on_node].astype(int)]

        if scalar:
            return FieldSample(t, float(r[0]), *(float(out[n][0]) for n in out))
        return FieldSample(t, r, **out)

    def _sample_comoving(self, t, r, ia, ib, theta, dt, out, mask):
        rho = r - t
        ends = []
        for i in (ia, ib):
            w, w_r, w_rr = self._nodal(i)[:3]
            x = rho + self.times[i]
            ends.append(
                (self._interp(w, x, -1.0), self._interp(w_r, x, 1.0), self._interp(w_rr, x, -1.0))
            )
        (wa, wra, wrra), (wb, wrb, wrrb) = ends
        w = (1.0 - theta) * wa + theta * wb
        w_r = (1.0 - theta) * wra + theta * wrb
        w_rr = (1.0 - theta) * wrra + theta * wrrb
        if dt > 0.0:
            d_w = (wb - wa) / dt
            d_wr = (wrb - wra) / dt
        else:
            d_w = d_wr = np.zeros_like(w)
        w_t = d_w - w_r
        w_tr = d_wr - w_rr

        u = w / r
        c = self.wave_speed(u)
        w_tt = c**2 * w_rr
        u_r = (w_r - u) / r
        u_t = w_t / r
        out["u"][mask] = u
        out["u_t"][mask] = u_t
        out["u_r"][mask] = u_r
        out["u_tt"][mask] = w_tt / r
        out["u_tr"][mask] = (w_tr - u_t) / r
        out["u_rr"][mask] = (w_rr - 2.0 * u_r) / r

    def _sample_origin(self, r, ia, ib, theta, dt, out, mask):
        ends = []
        for i in (ia, ib):
            u, u_r, u_rr = self._nodal(i)[3:]
            ends.append((self._interp(u, r, 1.0), self._interp(u_r, r, -1.0), self._interp(u_rr, r, 1.0)))
        (ua, ura, urra), (ub, urb, urrb) = ends
        u = (1.0 - theta) * ua + theta * ub
        u_r = (1.0 - theta) * ura + theta * urb
        u_rr = (1.0 - theta) * urra + theta * urrb
        c2 = self.wave_speed(u) ** 2
        safe_r = np.where(r > 0.0, r, 1.0)
        laplacian = np.where(r > 0.0, u_rr + 2.0 * u_r / safe_r, 3.0 * u_rr)
        out["u"][mask] = u
        out["u_r"][mask] = u_r
        out["u_rr"][mask] = u_rr
        out["u_tt"][mask] = c2 * laplacian
        if dt > 0.0:
            out["u_t"][mask] = (ub - ua) / dt
            out["u_tr"][mask] = (urb - ura) / dt

    def sup_history(self, t_min: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
        """(times, max_r |u|) over stored slices with t >= t_min"""
        keep = self.times >= t_min
        sups = np.array([np.max(np.abs(s)) if s.size else 0.0 for s in self.slices])
        return self.times[keep], sups[keep]

    def band_values(self, i: int, half_width: float, center_offset: float = 0.0):
        """(r, u) on slice i restricted to |r - t - center_offset| <= half_width"""
        r = self.r_grid(i)
        t = self.times[i]
        keep = np.abs(r - t - center_offset) <= half_width
        return r[keep], self.slices[i][keep]

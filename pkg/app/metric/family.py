"""Polynomial metric families g^{ab}(u) = m^{ab} + sum_k u^k g_k^{ab}.

All u-derivatives are exact polynomial derivatives. Index order is (t, x, y, z).
"""

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from app.core.errors import ConfigError, DomainError

MINKOWSKI = np.diag([-1.0, 1.0, 1.0, 1.0])
MAX_DEGREE = 4
DEFAULT_U_VALIDITY = 0.2


class MetricKind(Enum):
    """Metric family kinds"""

    ISOTROPIC = "isotropic"
    GENERAL = "general"


@dataclass(frozen=True)
class Direction:
    """Unit spatial direction with its null covector (-1, omega)"""

    omega: np.ndarray
    omega_hat: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        omega = np.asarray(self.omega, dtype=float)
        norm = float(np.linalg.norm(omega))
        if abs(norm - 1.0) > 1e-12:
            raise DomainError(f"direction is not a unit vector: |omega| = {norm!r}")
        object.__setattr__(self, "omega", omega)
        object.__setattr__(self, "omega_hat", np.concatenate(([-1.0], omega)))

    @classmethod
    def from_vector(cls, v) -> "Direction":
        """Normalize an arbitrary nonzero 3-vector"""
        v = np.asarray(v, dtype=float)
        return cls(v / np.linalg.norm(v))


@dataclass(frozen=True, eq=False)
class MetricFamily:
    """Inverse metric coefficients as a polynomial in u.

    ``coeffs[k-1]`` is the symmetric 4x4 matrix g_k. ``c_coeffs`` holds the
    wave-speed polynomial c(u) for isotropic families (c_coeffs[0] == 1).
    """

    kind: MetricKind
    coeffs: tuple[np.ndarray, ...]
    c_coeffs: tuple[float, ...] | None = None
    u_validity: float = DEFAULT_U_VALIDITY
    name: str = ""
    normalized: bool = True

    def __post_init__(self):
        if len(self.coeffs) > MAX_DEGREE:
            raise ConfigError(f"metric degree {len(self.coeffs)} exceeds {MAX_DEGREE}")
        if self.u_validity <= 0:
            raise ConfigError("u_validity must be positive")
        cleaned = []
        for k, gk in enumerate(self.coeffs, start=1):
            gk = np.array(gk, dtype=float)
            if gk.shape != (4, 4):
                raise ConfigError(f"g_{k} must be 4x4, got {gk.shape}")
            if not np.array_equal(gk, gk.T):
                raise ConfigError(f"g_{k} is not symmetric")
            if self.normalized and gk[0, 0] != 0.0:
                raise ConfigError(f"g_{k}^00 = {gk[0, 0]} but g^00 is normalized to -1")
            gk.setflags(write=False)
            cleaned.append(gk)
        object.__setattr__(self, "coeffs", tuple(cleaned))
        self._check_admissible()

    def _check_admissible(self):
        # Lorentzian signature on a grid of the validity interval
        for u in np.linspace(-self.u_validity, self.u_validity, 41):
            g = self._inverse(u)
            eig = np.linalg.eigvalsh(g)
            if not (eig[0] < 0.0 < eig[1]):
                raise ConfigError(
                    f"metric {self.name or self.kind.value} not Lorentzian at u={u:.3g}"
                )

    @property
    def degree(self) -> int:
        """Polynomial degree in u"""
        return len(self.coeffs)

    @property
    def is_flat(self) -> bool:
        """True when the coefficients do not depend on u"""
        return all(not gk.any() for gk in self.coeffs)

    def _check_u(self, u: float):
        if not np.isfinite(u) or abs(u) > self.u_validity:
            raise DomainError(f"|u| = {abs(u):.6g} exceeds u_validity = {self.u_validity}")

    def _inverse(self, u: float) -> np.ndarray:
        g = MINKOWSKI.copy()
        power = 1.0
        for gk in self.coeffs:
            power *= u
            g += power * gk
        return g

    def _inverse_du(self, u: float, order: int) -> np.ndarray:
        out = np.zeros((4, 4))
        for k, gk in enumerate(self.coeffs, start=1):
            if k < order:
                continue
            factor = float(np.prod(np.arange(k - order + 1, k + 1)))
            out += factor * u ** (k - order) * gk
        return out

    def inverse(self, u: float) -> np.ndarray:
        """g^{ab}(u)"""
        self._check_u(u)
        return self._inverse(u)

    def inverse_du(self, u: float, order: int = 1) -> np.ndarray:
        """d^order/du^order g^{ab}(u)"""
        self._check_u(u)
        return self._inverse_du(u, order)

    def lower(self, u: float) -> np.ndarray:
        """g_{ab}(u), the matrix inverse"""
        return np.linalg.inv(self.inverse(u))

    def lower_du(self, u: float) -> np.ndarray:
        """d/du g_{ab} = -g_l (dG/du) g_l"""
        gl = self.lower(u)
        return -gl @ self._inverse_du(u, 1) @ gl

    def lower_du2(self, u: float) -> np.ndarray:
        """d^2/du^2 g_{ab} = 2 g_l G' g_l G' g_l - g_l G'' g_l"""
        gl = self.lower(u)
        g1 = self._inverse_du(u, 1)
        g2 = self._inverse_du(u, 2)
        return 2.0 * gl @ g1 @ gl @ g1 @ gl - gl @ g2 @ gl

    @property
    def g0(self) -> np.ndarray:
        """Linearization g_0^{ab} = dg^{ab}/du at u = 0"""
        return self.coeffs[0] if self.coeffs else np.zeros((4, 4))

    def wave_speed(self, u):
        """c(u) for isotropic families (vectorized)"""
        if self.c_coeffs is None:
            raise ConfigError("wave speed is only defined for isotropic families")
        return np.polynomial.polynomial.polyval(u, self.c_coeffs)

    def wave_speed_du(self, u):
        """c'(u) for isotropic families (vectorized)"""
        if self.c_coeffs is None:
            raise ConfigError("wave speed is only defined for isotropic families")
        return np.polynomial.polynomial.polyval(
            u, np.polynomial.polynomial.polyder(self.c_coeffs)
        )

    def max_wave_speed(self) -> float:
        """max |c(u)| over the validity interval"""
        u = np.linspace(-self.u_validity, self.u_validity, 401)
        return float(np.max(np.abs(self.wave_speed(u))))


def isotropic(c_coeffs, u_validity: float = DEFAULT_U_VALIDITY, name: str = "") -> MetricFamily:
    """Family with g^00 = -1, g^0i = 0 and g^ij = c(u)^2 delta_ij.

    ``c_coeffs`` are ascending polynomial coefficients of c with c(0) = 1.
    """
    c = np.trim_zeros(np.asarray(c_coeffs, dtype=float), "b")
    if c.size == 0 or c[0] != 1.0:
        raise ConfigError(f"isotropic wave speed must satisfy c(0) = 1, got {c_coeffs!r}")
    c2 = np.polynomial.polynomial.polymul(c, c)
    coeffs = []
    for a_k in c2[1:]:
        gk = np.zeros((4, 4))
        gk[1, 1] = gk[2, 2] = gk[3, 3] = a_k
        coeffs.append(gk)
    while coeffs and not coeffs[-1].any():
        coeffs.pop()
    return MetricFamily(
        kind=MetricKind.ISOTROPIC,
        coeffs=tuple(coeffs),
        c_coeffs=tuple(float(x) for x in c),
        u_validity=u_validity,
        name=name,
    )


def general(
    coeffs,
    u_validity: float = DEFAULT_U_VALIDITY,
    name: str = "",
    normalized: bool = True,
) -> MetricFamily:
    """Family from explicit symmetric matrices g_1 .. g_d.

    ``normalized=False`` admits g_k^00 != 0 for algebraic checks such as
    null_form_G; the solver and tracing stages require normalized families.
    """
    return MetricFamily(
        kind=MetricKind.GENERAL,
        coeffs=tuple(np.asarray(gk, dtype=float) for gk in coeffs),
        u_validity=u_validity,
        name=name,
        normalized=normalized,
    )


def flat() -> MetricFamily:
    """Minkowski, u-independent"""
    return isotropic([1.0], name="flat")


def eval_inverse_metric(fam: MetricFamily, u: float) -> np.ndarray:
    """g^{ab}(u); DomainError outside the validity interval"""
    return fam.inverse(u)


def eval_lower_metric(fam: MetricFamily, u: float) -> np.ndarray:
    """g_{ab}(u)"""
    return fam.lower(u)


def _christoffel_tensor(gp: np.ndarray, du: np.ndarray) -> np.ndarray:
    # T_{mnb} = u_m g'_{nb} + u_n g'_{mb} - u_b g'_{mn}
    return (
        np.einsum("m,nb->mnb", du, gp)
        + np.einsum("n,mb->mnb", du, gp)
        - np.einsum("b,mn->mnb", du, gp)
    )


def christoffel(fam: MetricFamily, u: float, du) -> np.ndarray:
    """Gamma^a_{mn} with shape (4, 4, 4), symmetric in the last two indices"""
    du = np.asarray(du, dtype=float)
    ginv = fam.inverse(u)
    if fam.is_flat or not du.any():
        return np.zeros((4, 4, 4))
    tensor = _christoffel_tensor(fam.lower_du(u), du)
    return 0.5 * np.einsum("ab,mnb->amn", ginv, tensor)


def christoffel_derivative(fam: MetricFamily, u: float, du, ddu) -> np.ndarray:
    """d_l Gamma^a_{mn} with shape (l, a, m, n) from exact metric derivatives.

    ``ddu`` is the symmetric Hessian of u in (t, x, y, z).
    """
    du = np.asarray(du, dtype=float)
    ddu = np.asarray(ddu, dtype=float)
    if fam.is_flat:
        return np.zeros((4, 4, 4, 4))
    ginv = fam.inverse(u)
    ginv_du = fam.inverse_du(u, 1)
    gp = fam.lower_du(u)
    gpp = fam.lower_du2(u)

    tensor = _christoffel_tensor(gp, du)
    # d_l T_{mnb}: Hessian part plus chain rule through g'(u)
    d_tensor = (
        np.einsum("ml,nb->lmnb", ddu, gp)
        + np.einsum("nl,mb->lmnb", ddu, gp)
        - np.einsum("bl,mn->lmnb", ddu, gp)
        + np.einsum("l,mnb->lmnb", du, _christoffel_tensor(gpp, du))
    )
    return 0.5 * (
        np.einsum("l,ab,mnb->lamn", du, ginv_du, tensor)
        + np.einsum("ab,lmnb->lamn", ginv, d_tensor)
    )


def null_form_G(fam: MetricFamily, direction: Direction) -> float:
    """G(omega) = g_0^{ab} omega_hat_a omega_hat_b"""
    w = direction.omega_hat
    return float(w @ fam.g0 @ w)


def fibonacci_directions(n: int) -> list[Direction]:
    """Nearly uniform directions on the unit sphere"""
    i = np.arange(n) + 0.5
    polar = np.arccos(1.0 - 2.0 * i / n)
    azimuth = np.pi * (1.0 + 5.0**0.5) * i
    pts = np.stack(
        (np.cos(azimuth) * np.sin(polar), np.sin(azimuth) * np.sin(polar), np.cos(polar)),
        axis=1,
    )
    return [Direction.from_vector(p) for p in pts]


def satisfies_null_condition(fam: MetricFamily, n_directions: int = 200, tol: float = 1e-12) -> bool:
    """Classical null condition: G(omega) vanishes in every direction"""
    return all(abs(null_form_G(fam, d)) <= tol for d in fibonacci_directions(n_directions))

from dataclasses import dataclass

import numpy as np

from app.core.errors import ConfigError


def mollifier(x):
    """C-infinity bump exp(1 - 1/(1 - x^2)) on |x| < 1, zero elsewhere; equals 1 at 0"""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    inside = np.abs(x) < 1.0
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - x[inside] ** 2))
    return out


@dataclass(frozen=True)
class InitialData:
    """Radial data (eps*u0, eps*u1) with u_i(r) = P_i(r^2) * mollifier(r/R).

    Profiles depend on r^2 only, so they extend evenly through r = 0.
    """

    epsilon: float
    R: float = 1.0
    u0_poly: tuple[float, ...] = (1.0,)
    u1_poly: tuple[float, ...] = (0.0,)

    def __post_init__(self):
        if self.R <= 0:
            raise ConfigError(f"support radius must be positive, got {self.R}")
        if not 0.0 <= abs(self.epsilon) <= 0.1:
            raise ConfigError(f"epsilon must satisfy |eps| <= 0.1, got {self.epsilon}")

    def _profile(self, poly, r):
        r = np.asarray(r, dtype=float)
        return np.polynomial.polynomial.polyval(r**2, poly) * mollifier(r / self.R)

    def u0(self, r):
        """Unscaled position profile"""
        return self._profile(self.u0_poly, r)

    def u1(self, r):
        """Unscaled velocity profile"""
        return self._profile(self.u1_poly, r)

    def position(self, r):
        """u(0, r) = eps * u0(r)"""
        return self.epsilon * self.u0(r)

    def velocity(self, r):
        """u_t(0, r) = eps * u1(r)"""
        return self.epsilon * self.u1(r)

    @property
    def is_trivial(self) -> bool:
        """Zero amplitude or zero profiles"""
        return self.epsilon == 0.0 or (not any(self.u0_poly) and not any(self.u1_poly))

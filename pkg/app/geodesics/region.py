import math
from dataclasses import dataclass

import numpy as np

from app.core.errors import ConfigError
from app.metric.family import Direction


@dataclass(frozen=True)
class RegionSpec:
    """Exterior region Omega and its initialization cone H.

    Omega = {t > T0, r - T0 - 2R > kappa (t - T0)} and
    H = {t >= T0, r = kappa (t - T0) + T0 + 2R}.
    """

    kappa: float = 0.5
    T0: float = 10.0
    R: float = 1.0
    epsilon: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.kappa < 1.0:
            raise ConfigError(f"kappa must lie in (0, 1), got {self.kappa}")
        if self.T0 < 1.0:
            raise ConfigError(f"T0 must be >= 1, got {self.T0}")
        if self.R <= 0.0:
            raise ConfigError(f"R must be positive, got {self.R}")

    @property
    def delta_eff(self) -> float:
        """eps * ln T0, so that s = eps ln t - delta_eff vanishes at t = T0"""
        return self.epsilon * math.log(self.T0)

    def cone_radius(self, t):
        """Radius of H at time t"""
        return self.kappa * (np.asarray(t, dtype=float) - self.T0) + self.T0 + 2.0 * self.R

    def contains(self, t, r) -> np.ndarray:
        """Membership in Omega"""
        t = np.asarray(t, dtype=float)
        r = np.asarray(r, dtype=float)
        return (t > self.T0) & (r - self.T0 - 2.0 * self.R > self.kappa * (t - self.T0))

    def seed_time(self, z: float) -> float:
        """Time at which the H-point with r - t = z is reached"""
        if z > 2.0 * self.R:
            raise ConfigError(f"H carries only r - t <= 2R, got z = {z}")
        return self.T0 + (2.0 * self.R - z) / (1.0 - self.kappa)

    def s_of_t(self, t):
        """Slow time s = eps ln t - delta_eff"""
        return self.epsilon * np.log(np.asarray(t, dtype=float)) - self.delta_eff

    def t_of_s(self, s):
        """Inverse of s_of_t (eps > 0)"""
        if self.epsilon == 0.0:
            raise ConfigError("slow time is degenerate for eps = 0")
        return np.exp((np.asarray(s, dtype=float) + self.delta_eff) / self.epsilon)


@dataclass(frozen=True)
class Seed:
    """Starting point of one characteristic on H"""

    z: float
    t: float
    direction: Direction

    @property
    def r(self) -> float:
        return self.t + self.z

    @property
    def x(self) -> np.ndarray:
        """Spatial position"""
        return self.r * self.direction.omega

    @property
    def point(self) -> np.ndarray:
        """(t, x, y, z)"""
        return np.concatenate(([self.t], self.x))

    def rotated(self, direction: Direction) -> "Seed":
        """Same H-sphere, another direction"""
        return Seed(self.z, self.t, direction)


def make_seeds(
    region: RegionSpec,
    direction: Direction,
    dq: float = 0.05,
    z_min: float = -10.0,
    t_max: float | None = None,
) -> list[Seed]:
    """Seeds on H at q-values 2R, 2R - dq, ... down to z_min (ordered by decreasing z)"""
    if dq <= 0:
        raise ConfigError("seed spacing must be positive")
    n = int(math.floor((2.0 * region.R - z_min) / dq + 1e-9))
    seeds = []
    for i in range(n + 1):
        z = 2.0 * region.R - i * dq
        t = region.seed_time(z)
        if t_max is not None and t > t_max:
            break
        seeds.append(Seed(z, t, direction))
    return seeds

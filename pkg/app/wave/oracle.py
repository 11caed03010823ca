import numpy as np
from scipy.integrate import quad

from app.wave.initial_data import InitialData


def _velocity_primitive(data: InitialData, x: np.ndarray) -> np.ndarray:
    # Psi(x) = int_0^x y * eps * u1(y) dy, even in x and constant beyond R
    upper = np.minimum(np.abs(x), data.R)

    def integral(b: float) -> float:
        if b <= 0.0:
            return 0.0
        value, _ = quad(
            lambda y: y * float(data.velocity(y)), 0.0, b, epsabs=1e-14, epsrel=1e-12, limit=200
        )
        return value

    unique, inverse = np.unique(upper, return_inverse=True)
    values = np.array([integral(b) for b in unique])
    return values[inverse].reshape(np.shape(x))


def dalembert_radial(data: InitialData, t: float, r) -> np.ndarray:
    """Closed-form flat-metric solution u(t, r) for radial data.

    r u = [phi(r + t) - phi(t - r)] / 2 + [Psi(t + r) - Psi(t - r)] / 2 with
    phi(y) = y eps u0(|y|) and Psi the primitive of y eps u1(|y|).
    """
    r = np.asarray(r, dtype=float)

    def phi(y):
        return y * data.position(np.abs(y))

    w = 0.5 * (phi(r + t) - phi(t - r))
    if any(data.u1_poly) and data.epsilon != 0.0:
        w = w + 0.5 * (_velocity_primitive(data, t + r) - _velocity_primitive(data, t - r))
    u = np.empty_like(w)
    positive = r > 0.0
    u[positive] = w[positive] / r[positive]
    if (~positive).any():
        # u is even and smooth in r; the limit at the origin
        u[~positive] = dalembert_radial(data, t, np.array([1e-7]))[0]
    return u

import os

import numpy as np
import pytest


def pytest_configure(config):
    """Set safe environment defaults before any test module is imported."""
    os.environ.setdefault("LOG_LEVEL", "WARNING")
    os.environ.setdefault("LOG_JSON", "false")
    os.environ.setdefault("MAX_WORKERS", "2")
    os.environ.setdefault("METRICS_ENABLED", "true")


@pytest.fixture
def flat_family():
    from app.metric.family import flat

    return flat()


@pytest.fixture
def quasilinear_family():
    """c(u) = 1 + u, G = 2 in every direction"""
    from app.metric.family import isotropic

    return isotropic([1.0, 1.0], name="c=1+u")


@pytest.fixture
def direction():
    from app.metric.family import Direction

    return Direction.from_vector([0.0, 0.0, 1.0])


@pytest.fixture
def zero_field():
    """Stored zero field on a short horizon"""
    from app.wave.field import SolutionField

    h = 0.1
    times = np.linspace(0.0, 120.0, 241)
    slices = [np.zeros(int(np.ceil((t + 1.0) / h)) + 20) for t in times]
    return SolutionField(h=h, k=0.5, times=times, slices=slices, R=1.0)


@pytest.fixture
def bump_field():
    """Closed-form outgoing bump eps chi(r - t) / r with exact derivatives"""
    from app.wave.manufactured import manufactured_field, outgoing_bump

    return manufactured_field(outgoing_bump(0.02), 0.02, t_max=500.0, c_coeffs=(1.0, 1.0))


@pytest.fixture
def reduced_tables():
    """Smooth scattering tables supported in q < R = 1"""
    from app.reduced.solution import ReducedSolution
    from app.wave.initial_data import mollifier

    q = np.linspace(-6.0, 2.0, 81)
    bump = mollifier((q + 2.0) / 3.0)
    return ReducedSolution(q, -2.0 - 0.3 * bump, 0.4 * bump, 2.0, 1.0)


@pytest.fixture
def out_dir(tmp_path):
    return tmp_path / "run"

"""Shared field configurations and particle states."""

from pathlib import Path

import numpy as np
import pytest

from src.dynamics.state import ParticleState
from src.harmonics.gradients import GradientTable
from src.sampling.field import Field
from src.tracker.fields import (
    FieldConfiguration,
    analytic_benchmark,
    drift_configuration,
    realistic_surrogate,
)

REPO_ROOT = Path(__file__).resolve().parents[1]


@pytest.fixture(scope="session")
def repo_root() -> Path:
    return REPO_ROOT


@pytest.fixture(scope="session")
def analytic():
    """Benchmark quadrupole, ND=2, on a coarse grid."""
    return analytic_benchmark(nd=2, dz=0.02)


@pytest.fixture(scope="session")
def analytic_nd4():
    return analytic_benchmark(nd=4, dz=0.02)


@pytest.fixture(scope="session")
def surrogate():
    """Harmonics {2, 6, 10, 14}, gradients carried to order 18."""
    return realistic_surrogate(nd=16)


@pytest.fixture(scope="session")
def surrogate_skew(surrogate):
    """The surrogate gradients reinterpreted as skew gradients."""
    gt = surrogate.gradients
    return GradientTable(z=gt.z, nd=gt.nd, skew=dict(gt.normal), radius=gt.radius)


@pytest.fixture(scope="session")
def drift():
    return drift_configuration()


@pytest.fixture(scope="session")
def strong():
    """
    Benchmark profile scaled so one element turns the orbit by about a radian;
    exit errors then sit well above round-off for every step in use.
    """
    base = analytic_benchmark(nd=2, dz=0.01)
    return FieldConfiguration(name="strong", gradients=base.gradients, nd=2, scale_factor=200.0)


@pytest.fixture(scope="session")
def stiff():
    """ND=4 benchmark with a fringe focusing strength of order 10, for single-step checks."""
    base = analytic_benchmark(nd=4, dz=0.01)
    return FieldConfiguration(name="stiff", gradients=base.gradients, nd=4, scale_factor=2.0e4)


@pytest.fixture
def make_field():
    def factory(config, gauge="af", mode="exact", **options) -> Field:
        return config.field(gauge, mode=mode, **options)

    return factory


@pytest.fixture
def reference_state() -> ParticleState:
    return ParticleState(0.02, -0.04, 0.0, 0.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)

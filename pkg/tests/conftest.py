import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from dirac_hartree.fields import Grid2D, MixedState, SpinorField
from dirac_hartree.harnesses import random_band_limited

settings.register_profile("default", max_examples=25, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def grid_pi():
    """L = pi so that lattice frequencies are the integers."""
    return Grid2D(np.pi, 32)


def random_field(grid, rng, kmax=None) -> SpinorField:
    return SpinorField(grid, random_band_limited(grid, rng, kmax))


def random_state(grid, rng, count=3) -> MixedState:
    weights = rng.uniform(0.2, 1.0, count)
    return MixedState(tuple(random_field(grid, rng) for _ in range(count)), weights / weights.sum())


def rel(a, b) -> float:
    a, b = np.asarray(a), np.asarray(b)
    scale = max(np.max(np.abs(b)), 1e-300)
    return float(np.max(np.abs(a - b)) / scale)

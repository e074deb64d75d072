"""
Shared fixtures. Solved fields are session scoped: they are immutable and
several test modules read them.
"""
import numpy as np
import pytest

from paraconcave.domain import ConvexDomain
from paraconcave.solver import solve_parabolic, solve_steady
from paraconcave.sources import SourceSpec


@pytest.fixture(scope="session")
def unit_interval():
    return ConvexDomain.interval(0.0, 1.0)


@pytest.fixture(scope="session")
def torch_field(unit_interval):
    """u_t = u_xx + 1 on (0, 1), close to steady state at T = 2."""
    return solve_parabolic(unit_interval, SourceSpec.constant(1.0), h=1 / 64, dt=1e-3, T=2.0)


@pytest.fixture(scope="session")
def dist_field(unit_interval):
    return solve_parabolic(unit_interval, SourceSpec.dist_power(1.0), h=1 / 64, dt=1e-3, T=2.0)


@pytest.fixture(scope="session")
def steady_torch(unit_interval):
    return solve_steady(unit_interval, SourceSpec.constant(1.0), h=1 / 64)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def early_torch(unit_interval):
    """Constant source on a grid fine enough to resolve the initial layer."""
    return solve_parabolic(unit_interval, SourceSpec.constant(1.0), h=1 / 128, dt=1e-4, T=0.25)

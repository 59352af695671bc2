import numpy as np
import pytest

from hill4bp import lagrange, model

# Scans in the tests run in the main process, a pool is only started where
# the independence from the number of workers is checked.
SERIAL = {"number_worker": 1, "batch_size": 5000}


@pytest.fixture(params=[0.0, 0.00095, 0.2, 0.5], ids=lambda mu: f"mu={mu}")
def params(request):
    return model.derive_parameters(request.param)


@pytest.fixture
def hill():
    return model.derive_parameters(0.0)


@pytest.fixture
def intermediate():
    return model.derive_parameters(0.2)


@pytest.fixture
def equal_masses():
    return model.derive_parameters(0.5)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def h12(p):
    return lagrange.critical_values(p)[0]


def retrograde_state(radius=0.3, z=0.0, pz=0.0):
    """Nearly circular retrograde orbit around the origin, far from collision."""
    speed = 1.0 / np.sqrt(radius) + radius
    return model.phase_state(radius, 0.0, z, 0.0, radius - speed, pz)

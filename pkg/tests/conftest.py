import numpy as np
import pytest

from wulffkit.anisotropy import AnisotropyDensity
from wulffkit.sphere import build_grid


@pytest.fixture(scope="session")
def grid16():
    return build_grid(16)


@pytest.fixture(scope="session")
def grid24():
    return build_grid(24)


@pytest.fixture(scope="session")
def grid32():
    return build_grid(32)


@pytest.fixture(scope="session")
def grid48():
    return build_grid(48)


@pytest.fixture(scope="session")
def ellipsoidal():
    return AnisotropyDensity.ellipsoidal(np.diag([1.0, 1.0, 2.0]))


@pytest.fixture
def rng():
    return np.random.default_rng(0xC0FFEE)

import numpy as np
import pytest

from symrc.reservoir import HyperParams


@pytest.fixture
def basic_params():
    return HyperParams(gamma=2.0, rho_r=0.9, rho_in=0.5, sigma=0.8, k=5)


@pytest.fixture
def rng():
    return np.random.default_rng(42)

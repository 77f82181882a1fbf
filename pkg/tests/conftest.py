import numpy as np
import pytest

from eisenlift.odeint import IntegratorConfig


@pytest.fixture
def tight():
    return IntegratorConfig(rtol=1e-10, atol=1e-10)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)

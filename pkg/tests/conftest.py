import numpy as np
import pytest
from hypothesis import settings

from nanolase import LT, RT, GaussianTrain

settings.register_profile("nanolase", deadline=None, max_examples=40)
settings.load_profile("nanolase")

PULSE_3P5 = GaussianTrain(0.0, 3.5e-12, 13e-9)
PULSE_3P4 = GaussianTrain(0.0, 3.4e-12, 13e-9)


@pytest.fixture(scope="session")
def lt_pulsed():
    return LT.params("pulsed")


@pytest.fixture(scope="session")
def lt_cw():
    return LT.params("cw")


@pytest.fixture(scope="session")
def rt_pulsed():
    return RT.params("pulsed")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)

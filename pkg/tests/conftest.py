import numpy as np
import pytest
from hypothesis import settings

from cvnet.random_states import random_cm, random_state

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")

VAC = np.eye(2) / 2


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_two_mode(rng, scale=0.6, max_thermal=1.0):
    return random_cm(2, rng, scale=scale, max_thermal=max_thermal)


def random_net(rng, scale=0.6, max_thermal=0.5, max_shift=0.0):
    return random_state(3, rng, scale=scale, max_thermal=max_thermal, max_shift=max_shift)

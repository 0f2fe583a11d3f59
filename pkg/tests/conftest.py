import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from gatebudget.quantum import DOWN, UP

settings.register_profile("default", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

DD = np.kron(DOWN, DOWN)
UU = np.kron(UP, UP)
PLUS = math.sqrt(1 / 3) * DD + math.sqrt(2 / 3) * UU
MINUS = math.sqrt(1 / 3) * DD - math.sqrt(2 / 3) * UU
MIXED_1Q = math.sqrt(3 / 4) * DOWN + math.sqrt(1 / 4) * UP


def random_state(rng, dim):
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)


@pytest.fixture
def rng():
    return np.random.default_rng(2024)

import math

import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=200)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(20241016)


def random_velocity(rng, vmax=0.95, dims=3):
    from tachy.kinematics import Velocity

    d = rng.normal(size=3)
    if dims == 2:
        d[2] = 0.0
    d /= np.linalg.norm(d)
    s = vmax * rng.random() ** (1 / 3)
    return Velocity(*(s * d))


def close(a, b, tol):
    return abs(a - b) <= tol * max(1.0, abs(a), abs(b))


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)

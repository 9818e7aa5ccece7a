import numpy as np
import pytest

from qcurve.curvature import k_star
from qcurve.solver import Seed, continue_branch
from qcurve.sphere import ProblemParams

BLOWUP_SCHEDULE = [0.4, 0.2, 0.1, 0.05, 0.025]


@pytest.fixture(scope="session")
def p5():
    return ProblemParams(1)


@pytest.fixture(scope="session")
def p6():
    return ProblemParams(2)


@pytest.fixture(scope="session")
def kstar(p5):
    return k_star(p5)


@pytest.fixture(scope="session")
def blowup_branch(kstar):
    """Bubble-seeded branch of K = 2 + x_6 concentrating at the north pole."""
    return continue_branch(kstar, BLOWUP_SCHEDULE, Seed.bubble(), L=256)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)

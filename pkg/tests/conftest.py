import itertools
from pathlib import Path

import numpy as np
import pytest
from hypothesis import settings

from approx_olo.oracles import finite_instance, load_instance, setcover_instance

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def two_hot(d):
    return np.array([v for v in itertools.product([0, 1], repeat=d) if sum(v) == 2], float)


@pytest.fixture
def simplex2():
    return finite_instance(np.eye(2))


@pytest.fixture
def d4_exact():
    return finite_instance(two_hot(4))


@pytest.fixture
def d4_degraded():
    return finite_instance(two_hot(4), alpha=2.0)


@pytest.fixture
def d4_payoff():
    return finite_instance(two_hot(4), alpha=0.5)


@pytest.fixture
def setcover():
    return setcover_instance(4, [[0, 1], [2, 3], [0, 2], [1, 3], [0, 1, 2, 3]])


@pytest.fixture
def d3_bandit():
    return load_instance(CONFIGS / "d3_bandit.json")


@pytest.fixture
def configs_dir():
    return CONFIGS

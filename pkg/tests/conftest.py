import numpy as np
import pytest

from gridopt.cases import RandomCaseConfig, load_fixture, random_network
from gridopt.netmodel import to_per_unit

SUITE_SIZE = 200
SUITE_SEED = 20240917


@pytest.fixture
def net3():
    return to_per_unit(load_fixture("3bus"))


@pytest.fixture
def net3_congested():
    return to_per_unit(load_fixture("3bus_congested"))


@pytest.fixture
def net5():
    return to_per_unit(load_fixture("5bus"))


def make_suite(n=SUITE_SIZE, seed=SUITE_SEED):
    rng = np.random.default_rng(seed)
    cfg = RandomCaseConfig()
    return [to_per_unit(random_network(rng, cfg)) for _ in range(n)]


@pytest.fixture(scope="session")
def random_suite():
    return make_suite()

import numpy as np
import pytest

from fixvi import iterate as it
from fixvi import space as sp
from fixvi.operators import canonical_problem, generate_problem
from fixvi.params import Gains, Schedule

# frozen from tests/oracle/derive.py
CANONICAL_LIMIT = np.array([10.0 / 9.0, 0.0])

# the 20 generated Hilbert problems: dims 2..16, N in 1..4, fixed seeds
SUITE = [(seed, 2 + seed if seed < 15 else 4 + 3 * (seed - 15), 1 + seed % 4) for seed in range(20)]


def suite_problem(seed, dim, N):
    return generate_problem(seed, dim, N, sp.SpaceSpec.hilbert(dim))


@pytest.fixture(scope="session", autouse=True)
def _compiled():
    it.warm_up()


@pytest.fixture
def canonical():
    return canonical_problem()


@pytest.fixture
def canonical_cfg(canonical):
    g = Gains.for_problem(canonical, 1.0, 1.0)
    return it.AlgorithmConfig("synchronal", canonical, g, Schedule.power(1.0, 1.0), Schedule.constant(0.5),
                              np.array([5.0, 5.0]), reference=CANONICAL_LIMIT)

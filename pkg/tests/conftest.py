import numpy as np
import pytest

from adiabatic_majorization.model import build_problem, grover_problem, random_int_problem


def ensemble_problems(count=25, base_seed=1000):
    """Seeded random integer-cost problems with n cycling through 2..8."""
    return [random_int_problem(2 + i % 7, base_seed + i) for i in range(count)]


def unique_min_problems(count=10, base_seed=2000):
    return [random_int_problem(2 + i % 7, base_seed + i, unique_minimum=True) for i in range(count)]


@pytest.fixture(scope="session")
def ensemble():
    return ensemble_problems()


@pytest.fixture
def two_level():
    return build_problem([0.0, 1.0])


@pytest.fixture
def grover3():
    return grover_problem(3)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)

import pytest

from hypwalk.groups import FreeGroup, FreeProduct, IntegerLine
from hypwalk.measures import step_measure, uniform_measure


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running oracle or sweep")


@pytest.fixture(scope="session")
def Z():
    return IntegerLine()


@pytest.fixture(scope="session")
def F2():
    return FreeGroup(2)


@pytest.fixture(scope="session")
def P23():
    return FreeProduct(2, 3)


@pytest.fixture(scope="session")
def p_uniform(F2):
    return uniform_measure(F2)


@pytest.fixture(scope="session")
def p_biased(F2):
    return step_measure(F2, [((1,), 0.4), ((-1,), 0.1),
                             ((2,), 0.25), ((-2,), 0.25)])


@pytest.fixture(scope="session")
def p_drift(Z):
    return step_measure(Z, [(1, 0.7), (-1, 0.3)])


@pytest.fixture(scope="session")
def p_longrange(F2):
    # adds length-2 jumps along the first generator; step radius 2
    return step_measure(F2, [((1,), 0.2), ((-1,), 0.2), ((2,), 0.2),
                             ((-2,), 0.2), ((1, 1), 0.1), ((-1, -1), 0.1)])

import numpy as np
import pytest

from zeropower import DesignMatrix, ar1_model, build_lattice_weights, sar_model


@pytest.fixture(scope="session")
def queen():
    return build_lattice_weights(4, 4, "queen", "binary")


@pytest.fixture(scope="session")
def sar(queen):
    return sar_model(queen)


@pytest.fixture(scope="session")
def ar1():
    return ar1_model(16)


@pytest.fixture(scope="session")
def ones16():
    return DesignMatrix.intercept(16)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def k4():
    return np.ones((4, 4)) - np.eye(4)


# acceptance results, printed as one line per criterion at the end of the run
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for line in ACCEPTANCE:
        terminalreporter.write_line(line)

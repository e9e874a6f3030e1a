import pytest

from volterra.grid import TimeGrid
from volterra.kernel import make_kernel
from volterra.spectral_operator import make_laplacian_1d
from volterra.wiener import QCovariance


@pytest.fixture
def exp_kernel():
    return make_kernel("exponential")


@pytest.fixture
def const_kernel():
    return make_kernel("constant")


@pytest.fixture
def lap4():
    return make_laplacian_1d(4)


@pytest.fixture
def q4():
    return QCovariance.power_law(4, 4.0)


@pytest.fixture
def grid200():
    return TimeGrid(1.0, 200)


def pytest_terminal_summary(terminalreporter):
    from tests import acceptance_log

    if acceptance_log.LINES:
        terminalreporter.section("acceptance criteria")
        for line in acceptance_log.LINES:
            terminalreporter.write_line(line)

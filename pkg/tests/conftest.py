import numpy as np
import pytest

from bgkspectral.numerics import Grid

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def grid():
    return Grid()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

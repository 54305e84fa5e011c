import numpy as np
import pytest

from nsfit.model import builtin_reference
from nsfit.synth import DEFAULT_GRID

ACCEPTANCE_LINES = []


@pytest.fixture
def grid():
    return DEFAULT_GRID.copy()


@pytest.fixture
def ref():
    return builtin_reference()


@pytest.fixture
def rng():
    return np.random.default_rng(20221019)


@pytest.fixture
def acceptance_log():
    return ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(line)

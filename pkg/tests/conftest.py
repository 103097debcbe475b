import math

import pytest

from smchatter import ControllerSpec

DELTA = 5.0
K = K2 = 1.1 * DELTA
K1 = 2.0 * math.sqrt(DELTA)
B = 3.0

ACCEPTANCE_LINES = []


@pytest.fixture
def lsv():
    return ControllerSpec.lsv(K, B, DELTA)


@pytest.fixture
def tsv():
    return ControllerSpec.tsv(K, B, DELTA)


@pytest.fixture
def stc():
    return ControllerSpec.stc(K1, K2, DELTA)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

import numpy as np
import pytest

from hermite_cosim.coupling import CouplingGraph, SystemLayout


@pytest.fixture
def msd_layout():
    return SystemLayout((2, 1), (1, 2))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def identity_graph(n):
    return CouplingGraph(SystemLayout((n,), (n,)), tuple((i, i) for i in range(n)))


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import REPORT
    if REPORT:
        terminalreporter.section("acceptance criteria")
        for line in REPORT:
            terminalreporter.write_line(line)

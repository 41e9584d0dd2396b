import numpy as np
import pytest

from lqccsim import numerics as nx

ACCEPTANCE_LINES = []


@pytest.fixture
def rng():
    return nx.derive_rng(20261018, "tests")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def assert_close(a, b, tol):
    diff = np.max(np.abs(np.asarray(a) - np.asarray(b)))
    assert diff <= tol, f"max deviation {diff:.3e} > {tol:.1e}"

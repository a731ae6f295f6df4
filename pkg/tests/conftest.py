import numpy as np
import pytest

from qlock.linalg import BipartiteDims
from qlock.uncertainty import haar_ensemble


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_ensemble(rng):
    return haar_ensemble(BipartiteDims(4, 3), 3, rng)


def pytest_terminal_summary(terminalreporter):
    import sys

    module = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    lines = getattr(module, "LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)

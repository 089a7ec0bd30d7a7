import sys

import hypothesis
import numpy as np
import pytest

from rmslyap import IIDDriver, RandomMatrixSystem

hypothesis.settings.register_profile("default", deadline=None, max_examples=60)
hypothesis.settings.register_profile("fast", deadline=None, max_examples=10)
hypothesis.settings.load_profile("default")

# d1, d2 independent, each uniform on {1, 4}
D_PAIRS = [[1, 1], [1, 4], [4, 1], [4, 4]]
IID4 = IIDDriver([0.25] * 4)


@pytest.fixture
def all_ones():
    return RandomMatrixSystem(np.ones((2, 2)), D_PAIRS, IID4)


@pytest.fixture
def permutation():
    return RandomMatrixSystem([[0, 1], [1, 0]], D_PAIRS, IID4)


def constant_system(A, d):
    return RandomMatrixSystem(A, [d], IIDDriver([1.0]))


def pytest_terminal_summary(terminalreporter):
    acceptance = sys.modules.get("test_acceptance")
    if acceptance is None or not acceptance.LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(acceptance.LINES):
        terminalreporter.write_line(acceptance.LINES[k])

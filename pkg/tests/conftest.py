import numpy as np
import pytest

from motionphys import synth
from motionphys.core import GroundPlane

# one line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE_LINES = {}


@pytest.fixture(scope="session")
def figure():
    return synth.humanoid(resolution=1)


@pytest.fixture(scope="session")
def body(figure):
    return figure.body


@pytest.fixture
def plane():
    return GroundPlane()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES, key=lambda k: (len(k), k)):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])

import os

import numpy as np
import pytest

from unitonkit.goldens import golden_extended
from unitonkit.looplab import loop_eval_lambda
from unitonkit.unitons import one_uniton_from_holo

os.environ.setdefault("UNITONKIT_WORKERS", str(min(4, os.cpu_count() or 1)))


@pytest.fixture(scope="session")
def golden_E():
    return golden_extended()


@pytest.fixture(scope="session")
def golden_S(golden_E):
    return loop_eval_lambda(golden_E, 1)


@pytest.fixture(scope="session")
def uniton_1z():
    return one_uniton_from_holo(["1", "z"])


@pytest.fixture
def rng():
    return np.random.default_rng(20261015)


# acceptance lines are collected here and echoed in the terminal summary
ACCEPTANCE_LINES: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])

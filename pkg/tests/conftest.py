import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from interval_observer.decomp import decompose_model
from interval_observer.model import ct_pendulum, ct_pendulum_transformed, henon_dt
from interval_observer.synthesis import build_problem, synthesize

# injection gain for which the transformed pendulum LMIs are feasible
CT_FEASIBLE_GAIN = 500.0

ACCEPTANCE_LINES = []


class Scenario:
    def __init__(self, model, rule="lower"):
        self.model = model
        self.dec, self.wb = decompose_model(model, rule)
        self.problem = build_problem(self.dec, self.wb, model.time_type)
        self._result = None

    @property
    def result(self):
        if self._result is None:
            self._result = synthesize(self.problem)
        return self._result

    @property
    def gain(self):
        return self.result.gain


@pytest.fixture(scope="session")
def henon():
    return Scenario(henon_dt())


@pytest.fixture(scope="session")
def pendulum():
    return Scenario(ct_pendulum())


@pytest.fixture(scope="session")
def pendulum_reference_t():
    return Scenario(ct_pendulum_transformed())


@pytest.fixture(scope="session")
def pendulum_feasible():
    return Scenario(ct_pendulum_transformed(CT_FEASIBLE_GAIN))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)

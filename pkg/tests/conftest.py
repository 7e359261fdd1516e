import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from gplinear import Dataset  # noqa: E402
from gplinear.simulation import Scenario, generate  # noqa: E402

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def toy():
    """n=5 dataset with an intercept and a centered predictor."""
    x = np.array([-2.0, -1.0, 0.0, 1.0, 2.0])
    y = np.array([0.3, 1.1, 0.4, 1.9, 1.2])
    return Dataset(y=y, x=x, Z=np.ones((5, 1)))


@pytest.fixture
def bump_data():
    return generate(Scenario("bump", 0.5, 50), rng=np.random.default_rng(7))


@pytest.fixture
def null_data():
    return generate(Scenario("bump", 0.0, 50), rng=np.random.default_rng(8))

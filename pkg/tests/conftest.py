import numpy as np
import pytest

from recipe_rl.grid import default_paper_grid
from recipe_rl.oracle import brute_force
from recipe_rl.predictor import PAPER_TARGET, ObjectiveSpec, ReferenceSurrogate

# fixture B: target is the surrogate's own prediction at this recipe
FIXTURE_B_RECIPE = (100, 60, 8, 31)


@pytest.fixture(scope="session")
def grid():
    return default_paper_grid()


@pytest.fixture(scope="session")
def surrogate():
    return ReferenceSurrogate()


@pytest.fixture(scope="session")
def spec_a():
    return ObjectiveSpec(PAPER_TARGET)


@pytest.fixture(scope="session")
def spec_b(grid, surrogate):
    return ObjectiveSpec(surrogate.predict(grid.state_at(FIXTURE_B_RECIPE)))


@pytest.fixture(scope="session")
def oracle_a(grid, surrogate, spec_a):
    return brute_force(grid, surrogate, spec_a)


@pytest.fixture(scope="session")
def oracle_b(grid, surrogate, spec_b):
    return brute_force(grid, surrogate, spec_b)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

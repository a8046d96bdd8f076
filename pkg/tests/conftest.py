import numpy as np
import pytest

from bo_scattering.grid_transforms import Grid, gaussian, zero_potential

ACCEPTANCE_LINES = []


def record_criterion(number: int, name: str, passed: bool, detail: str) -> None:
    """Collect one acceptance line; all lines are printed in the terminal summary."""
    status = "PASS" if passed else "FAIL"
    line = f"[{status}] criterion {number:2d} {name}: {detail}"
    ACCEPTANCE_LINES.append((number, line))
    print(line)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def grid():
    return Grid(40.0, 2048)


@pytest.fixture(scope="session")
def small_grid():
    return Grid(20.0, 512)


@pytest.fixture(scope="session")
def u_half(grid):
    return gaussian(grid, 0.5)


@pytest.fixture(scope="session")
def u_zero(grid):
    return zero_potential(grid)


@pytest.fixture
def rng():
    return np.random.default_rng(20261016)

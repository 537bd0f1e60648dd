import numpy as np
import pytest

from burkholder.paths import BrownianPath, SimConfig, TimeGrid

ACCEPTANCE_LINES: list[str] = []


def path_on(values, horizon=None, dt=None):
    """Single path with the given grid values on an evenly spaced grid."""
    w = np.asarray(values, dtype=float)
    n = w.size - 1
    if horizon is None:
        horizon = n * (1.0 if dt is None else dt)
    return BrownianPath(TimeGrid(0.0, horizon, n), w)


@pytest.fixture
def small_config():
    return SimConfig(master_seed=7, n_paths=64, grid=TimeGrid.from_dt(1.0, 1e-2))


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

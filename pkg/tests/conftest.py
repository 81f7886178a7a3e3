import numpy as np
import pytest

from roughlocal.levy_model import LevyModel
from roughlocal.local_time import local_time_binning, local_time_tanaka, path_grid
from roughlocal.path_sim import simulate

BROWNIAN = LevyModel(1.0, 0.0)


def brownian_path(k=0, seed=11, dt=1e-4, T=1.0):
    return simulate(BROWNIAN, 0.0, T, dt, 0.0, seed, path_id=k)


@pytest.fixture(scope="session")
def bm_path():
    return brownian_path()


@pytest.fixture(scope="session")
def bm_binning(bm_path):
    return local_time_binning(bm_path, path_grid(bm_path, 1023))


@pytest.fixture(scope="session")
def bm_tanaka(bm_path):
    return local_time_tanaka(bm_path, path_grid(bm_path, 1023))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion")[1].split()[0])):
            terminalreporter.write_line(line)

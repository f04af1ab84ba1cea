import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from machlab import geometry as geo
from machlab.config import cached_grid

settings.register_profile(
    "machlab", max_examples=10, deadline=None,
    suppress_health_check=[HealthCheck.function_scoped_fixture, HealthCheck.too_slow],
)
settings.load_profile("machlab")

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def channel():
    return cached_grid(geo.CHANNEL, 64, 33, None, 2 / 3)


@pytest.fixture(scope="session")
def annulus():
    return cached_grid(geo.ANNULUS, 64, 33, None, 2 / 3)


@pytest.fixture(scope="session")
def coarse():
    return cached_grid(geo.CHANNEL, 32, 17, None, 2 / 3)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def acceptance_log():
    return ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)

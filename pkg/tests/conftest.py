import numpy as np
import pytest
from hypothesis import settings

from finbisim import fixtures
from finbisim.bisim import algorithm1, algorithm2
from finbisim.sysmodel import RunConfig

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")

# acceptance lines collected by tests/test_acceptance.py
ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def tri():
    return fixtures.triangular_five_letter()


@pytest.fixture(scope="session")
def fub5(tri):
    return algorithm2(tri, RunConfig(z=4))


@pytest.fixture(scope="session")
def fub25(tri):
    return algorithm2(tri, RunConfig(z=24))


@pytest.fixture(scope="session")
def fub_two(tri):
    return algorithm1(tri, RunConfig(epsilon=0.3))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

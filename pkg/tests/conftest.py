import numpy as np
import pytest

from emrtm import Aperture, BoundaryCondition, ParametricBoundary, Scene, WaveConfig

# acceptance lines collected by tests/test_acceptance.py, echoed at the end of the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def unit_pec():
    return Scene.single(ParametricBoundary.circle(), BoundaryCondition.pec())


@pytest.fixture(scope="session")
def wave1():
    return WaveConfig.from_wavelength(1.0)


@pytest.fixture(scope="session")
def small_aperture():
    return Aperture(32, 50.0, 32, 50.0)

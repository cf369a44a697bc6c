import pytest

from hetgkf.fields import PowerSpectrum, SphereSynthesizer
from hetgkf.mesh import icosphere


@pytest.fixture(scope="session")
def grid6():
    return icosphere(6)


@pytest.fixture(scope="session")
def synth6(grid6):
    return SphereSynthesizer(grid6, 20)


@pytest.fixture(scope="session")
def beam_pair():
    """Two unit-variance spectra on l <= 20 with lambda_1 close to 2 lambda_2."""
    return PowerSpectrum.gaussian_beam(20, 8.0), PowerSpectrum.gaussian_beam(20, 5.3)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from dampol.medium import CouplingSpec, MediumParams
from dampol.modes import ModeIndex
from dampol.response import LaplaceResponse

settings.register_profile(
    "dampol", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("dampol")

# acceptance lines collected by test_acceptance, printed after the run
ACCEPTANCE_LINES = {}


@pytest.fixture
def medium():
    return MediumParams()


@pytest.fixture
def ohmic():
    return CouplingSpec.ohmic(0.1)


@pytest.fixture
def canonical(medium, ohmic):
    """Scaled Ohmic medium, rho = alpha = eps0 = omega0 = 1, beta = 0.1."""
    return LaplaceResponse(medium, ohmic)


@pytest.fixture
def mode1():
    return ModeIndex(1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20261015)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[n])

import numpy as np
import pytest

from sphere_swave.fields import SpectralField
from sphere_swave.harmonics import mode_degrees, n_modes


def random_field(rng, kappa, decay=1.0):
    """Random coefficients damped like ``(1 + l)^-decay``."""
    ls = mode_degrees(kappa)
    return SpectralField(kappa, rng.standard_normal(n_modes(kappa)) / (1.0 + ls) ** decay)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES: list = []


def record_acceptance(criterion: str, passed: bool, detail: str) -> None:
    ACCEPTANCE_LINES.append(f"{'PASS' if passed else 'FAIL'}  {criterion}: {detail}")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

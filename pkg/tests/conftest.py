import numpy as np
import pytest
from hypothesis import settings

from beamflat.flatseries import FlatTrajectory
from beamflat.gevrey import GevreyProfile
from beamflat.green import evenly_spaced, solve_amplitudes, three_bump_shape

settings.register_profile("default", max_examples=50, deadline=None)
settings.load_profile("default")


@pytest.fixture(scope="session")
def scenario_plan():
    return solve_amplitudes(evenly_spaced(12), three_bump_shape())


@pytest.fixture(scope="session")
def profile():
    return GevreyProfile(1.111, 5.0)


@pytest.fixture(scope="session")
def unit_traj(profile):
    return FlatTrajectory(1.0, profile)


def scenario_h0(x):
    return -3e-3 * np.exp(-400.0 * (np.asarray(x) - 0.8) ** 2)


_ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance():
    """Record one PASS/FAIL line per acceptance criterion, then assert it."""

    def record(number, title, passed, detail):
        line = f"criterion {number:>2} {'PASS' if passed else 'FAIL'}  {title}: {detail}"
        _ACCEPTANCE_LINES.append(line)
        print(line)
        assert passed, line

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)

import sys
from pathlib import Path

import pytest

from qmeasure.continuum import Grid, PropagatorSpec, gaussian_packet

FIXTURES = Path(__file__).parent / "fixtures" / "scenarios"


@pytest.fixture(scope="session")
def scenario_dir():
    return FIXTURES


@pytest.fixture(scope="session")
def grid():
    return Grid()


@pytest.fixture(scope="session")
def free():
    return PropagatorSpec("free")


@pytest.fixture(scope="session")
def sho():
    return PropagatorSpec("sho", omega=1.0)


@pytest.fixture(scope="session")
def packet():
    return gaussian_packet(0.0, 1.0, 1.0)


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    results = getattr(module, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(results, key=lambda k: (int(k.rstrip("abc")), k)):
        terminalreporter.write_line(results[key])

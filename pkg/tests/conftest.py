import pytest

from uavwpcn.kinematics import KinematicLimits
from uavwpcn.propulsion import AirframeParams, derive_constants

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def airframe():
    return AirframeParams()


@pytest.fixture(scope="session")
def consts(airframe):
    return derive_constants(airframe)


@pytest.fixture(scope="session")
def limits():
    return KinematicLimits(v_max=30.0, a_max=5.0)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)

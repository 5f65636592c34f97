import pytest

from afmtj_lab.device import DeviceParams
from afmtj_lab.integrator import SolverOptions
from afmtj_lab.util import data_path

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def afmtj():
    return DeviceParams.load(data_path("devices/afmtj_calibrated.json"))


@pytest.fixture(scope="session")
def mtj():
    return DeviceParams.load(data_path("devices/mtj_calibrated.json"))


@pytest.fixture
def solver():
    return SolverOptions()


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("[")[1].split("]")[0])):
            terminalreporter.write_line(line)

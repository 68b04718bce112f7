import pytest

from vanetsim import SimConfig
from vanetsim.geometry import build_cross_network


@pytest.fixture
def cfg():
    return SimConfig()


@pytest.fixture
def net(cfg):
    return build_cross_network(cfg)


# verdict lines filled in by test_acceptance.py
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

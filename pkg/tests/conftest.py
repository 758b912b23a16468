import pytest

from ffgp.analysis import ThermoEvaluator


@pytest.fixture(scope="session")
def walk_d2():
    return ThermoEvaluator(2, 1.0)


@pytest.fixture(scope="session")
def walk_d3():
    return ThermoEvaluator(3, 1.0)


def pytest_terminal_summary(terminalreporter):
    from tests import acceptance_log

    if acceptance_log.LINES:
        terminalreporter.section("acceptance criteria")
        for number in sorted(acceptance_log.LINES):
            terminalreporter.write_line(acceptance_log.LINES[number])

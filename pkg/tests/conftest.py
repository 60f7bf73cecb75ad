import pytest

import acceptance_log
from mcsched.config import bundled


@pytest.fixture(scope="session")
def table1():
    return bundled("table1")


@pytest.fixture(scope="session")
def table2():
    return bundled("table2")


def pytest_terminal_summary(terminalreporter):
    if not acceptance_log.LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(acceptance_log.LINES):
        terminalreporter.write_line(acceptance_log.LINES[n])

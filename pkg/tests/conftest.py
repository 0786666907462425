from __future__ import annotations

import pytest

from confokit import fixtures


@pytest.fixture
def net1():
    return fixtures.net1()


@pytest.fixture
def table1():
    return fixtures.table1()


@pytest.fixture
def id7(table1):
    return table1.trace("id-7")


@pytest.fixture
def id4(table1):
    return table1.trace("id-4")


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(RESULTS, key=lambda k: (int(k.rstrip("ab")), k)):
        terminalreporter.write_line(RESULTS[number])

import pytest

from retrialq import SystemParams

ACCEPTANCE = {}


@pytest.fixture
def erg_params():
    return SystemParams(1.0, 3.0, 2.0)


@pytest.fixture
def null_params():
    return SystemParams(2.0, 1.0, 1.0)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, title, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {n}. {title}: {detail}")

import warnings

import pytest

from torpot.config import RunConfig

ACCEPTANCE = {}


def record(number, ok, detail=""):
    """Store one acceptance line; printed after the run."""
    ACCEPTANCE[number] = (bool(ok), detail)
    return ok


@pytest.fixture
def cfg():
    return RunConfig()


@pytest.fixture(autouse=True)
def _quiet_numerics():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        yield


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}")

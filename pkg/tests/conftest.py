import re
from pathlib import Path

import pytest

FIXTURES = Path(__file__).parent / "fixtures"
ABE = FIXTURES / "abe"

_acceptance = {}


@pytest.fixture
def abe_dir():
    return ABE


def pytest_runtest_logreport(report):
    m = re.search(r"test_acceptance\.py::test_criterion_(\d+)_(\w+)", report.nodeid)
    if not m:
        return
    key = (int(m.group(1)), m.group(2))
    if report.when == "call":
        _acceptance[key] = "PASS" if report.passed else ("SKIP" if report.skipped else "FAIL")
    elif report.when == "setup" and report.skipped:
        _acceptance[key] = "SKIP"
    elif report.failed:
        _acceptance[key] = "FAIL"


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for (n, name), status in sorted(_acceptance.items()):
        terminalreporter.write_line(f"criterion {n} [{name}]: {status}")

from pathlib import Path

import pytest

DATA = Path(__file__).parent / "data"


@pytest.fixture
def mini_train():
    return DATA / "mini_train.txt"


@pytest.fixture
def mini_test():
    return DATA / "mini_test.txt"


_criteria = {}


def pytest_runtest_logreport(report):
    name = report.nodeid.rsplit("::", 1)[-1]
    if not name.startswith("test_criterion_"):
        return
    if report.when == "call" or report.outcome != "passed":
        detail = dict(report.user_properties).get("detail", "")
        if report.skipped:
            detail = detail or str(report.longrepr[-1]) if isinstance(report.longrepr, tuple) else detail
        _criteria[name] = ("SKIP" if report.skipped else report.outcome.upper().replace("FAILED", "FAIL")
                           .replace("PASSED", "PASS"), detail)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_criteria):
        outcome, detail = _criteria[name]
        number = int(name.split("_")[2])
        label = " ".join(name.split("_")[3:])
        terminalreporter.write_line(f"criterion {number:2d} {outcome:4s}  {label}: {detail}")

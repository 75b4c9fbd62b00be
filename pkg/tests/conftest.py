import pytest

REPORT = {}  # criterion number -> line


@pytest.fixture
def criterion(request):
    """Record a PASS/FAIL line for an acceptance criterion; the test body fills in ``details``."""
    rec = {"details": ""}
    yield rec
    num, title = request.node.function.criterion
    failed = getattr(request.node, "failed_call", False)
    status = "FAIL" if failed else "PASS"
    REPORT[num] = f"[{status}] {num}. {title}" + (f": {rec['details']}" if rec["details"] else "")
    print(REPORT[num])


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call" and rep.failed:
        item.failed_call = True


def pytest_terminal_summary(terminalreporter):
    if REPORT:
        terminalreporter.section("acceptance criteria")
        for num in sorted(REPORT):
            terminalreporter.write_line(REPORT[num])

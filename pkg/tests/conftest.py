"""One PASS/FAIL line per acceptance criterion at the end of the session."""
from collections import defaultdict

import pytest

_OUTCOMES = defaultdict(list)


def pytest_runtest_logreport(report):
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        marker = getattr(report, "criterion", None)
        if marker is not None:
            measured = [f"{k}={v}" for k, v in report.user_properties]
            _OUTCOMES[marker].append((report.nodeid, report.outcome, measured))


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    marker = item.get_closest_marker("criterion")
    if marker is not None:
        outcome.get_result().criterion = marker.args[0]


def pytest_terminal_summary(terminalreporter):
    if not _OUTCOMES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_OUTCOMES):
        results = _OUTCOMES[number]
        failed = [nodeid.split("::")[-1] for nodeid, out, _ in results if out != "passed"]
        status = "FAIL" if failed else "PASS"
        detail = f" ({', '.join(failed)})" if failed else ""
        terminalreporter.write_line(f"{status} criterion {number}: "
                                    f"{len(results) - len(failed)}/{len(results)} checks{detail}")
        for _, _, measured in results:
            for line in measured:
                terminalreporter.write_line(f"    {line}")

"""Collects acceptance results and prints one PASS/FAIL line per criterion."""

import pytest

_RESULTS = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when != "call" and not rep.failed:
        return
    num, title = mark.args
    details = "; ".join(f"{k}={v}" for k, v in item.user_properties)
    prev = _RESULTS.get(num)
    if prev is None or rep.failed:
        _RESULTS[num] = ("PASS" if rep.passed else "FAIL", title, details)


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_RESULTS):
        status, title, details = _RESULTS[num]
        line = f"{status} criterion {num}: {title}"
        if details:
            line += f" [{details}]"
        terminalreporter.write_line(line)

"""Shared pytest configuration: one summary line per acceptance criterion."""

import pytest

_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion covered by a test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when != "call":
        return
    number, title = mark.args
    ok = rep.passed
    prev = _CRITERIA.get(number)
    detail = ""
    if not ok and rep.longrepr is not None:
        detail = str(getattr(rep.longrepr, "reprcrash", None) and rep.longrepr.reprcrash.message or "")
        detail = detail.splitlines()[0] if detail else ""
    if prev is None:
        _CRITERIA[number] = (title, ok, detail)
    else:
        _CRITERIA[number] = (title, prev[1] and ok, prev[2] or detail)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        title, ok, detail = _CRITERIA[number]
        line = f"criterion {number:2d} {'PASS' if ok else 'FAIL'}: {title}"
        if detail:
            line += f" [{detail}]"
        terminalreporter.write_line(line)

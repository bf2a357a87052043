"""Acceptance bookkeeping: one pass/fail line per criterion at the end of the run."""

import pytest

_RESULTS = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion number and title")


@pytest.fixture
def detail(request):
    """Append a short measured value to the criterion's summary line."""

    def add(text):
        request.node.user_properties.append(("detail", text))

    return add


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    n, title = mark.args
    failed = rep.failed or (rep.when == "call" and rep.skipped)
    prev = _RESULTS.get(n)
    if rep.when == "call" or failed:
        details = [v for k, v in item.user_properties if k == "detail"]
        ok = not failed and (prev is None or prev[0])
        _RESULTS[n] = (ok, title, "; ".join(details))


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_RESULTS):
        ok, title, details = _RESULTS[n]
        line = f"criterion {n:2d} {'PASS' if ok else 'FAIL'}  {title}"
        if details:
            line += f"  [{details}]"
        terminalreporter.write_line(line)

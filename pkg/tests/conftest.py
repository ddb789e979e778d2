"""Collects outcomes of tests marked ``criterion`` and prints one line per criterion."""

import pytest

_RESULTS = pytest.StashKey[dict]()


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or report.when != "call":
        return
    number, title = marker.args
    detail = "; ".join(f"{k}={v}" for k, v in report.user_properties)
    status = "PASS" if report.passed else "FAIL"
    item.config.stash.setdefault(_RESULTS, {})[number] = (status, title, report.duration, detail)


def pytest_terminal_summary(terminalreporter, config):
    results = config.stash.get(_RESULTS, None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        status, title, duration, detail = results[number]
        line = f"criterion {number:>2} {status}  {title} ({duration:.1f}s)"
        terminalreporter.write_line(line + (f"  [{detail}]" if detail else ""))

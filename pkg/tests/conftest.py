"""Collects acceptance outcomes and prints one line per criterion at the end of the run."""

import re

import pytest

_CRITERION = re.compile(r"test_criterion_(\d+)")
_results = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    m = _CRITERION.search(item.name)
    if m is None or item.module.__name__.rsplit(".", 1)[-1] != "test_acceptance":
        return
    num = int(m.group(1))
    doc = (item.function.__doc__ or item.name).strip().splitlines()[0]
    entry = _results.setdefault(num, {"title": doc, "failed": False, "ran": False, "details": []})
    if report.when == "call" or report.failed:
        entry["ran"] = True
        entry["failed"] |= report.failed
    if report.when == "call":
        entry["details"] += [f"{item.callspec.id}: {v}" if hasattr(item, "callspec") else v for k, v in item.user_properties if k == "detail"]


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for num in sorted(_results):
        entry = _results[num]
        status = "FAIL" if entry["failed"] else ("PASS" if entry["ran"] else "SKIP")
        tr.write_line(f"criterion {num:2d} {status}: {entry['title']}")
        for d in entry["details"]:
            tr.write_line(f"    {d}")

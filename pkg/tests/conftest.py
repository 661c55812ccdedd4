from __future__ import annotations

import pytest

_CRITERIA: dict[int, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion a test belongs to")


def pytest_collection_modifyitems(items):
    for item in items:
        mark = item.get_closest_marker("criterion")
        if mark is not None:
            num, title = mark.args
            entry = _CRITERIA.setdefault(num, {"title": title, "nodes": set(), "failed": set(), "seen": set()})
            entry["nodes"].add(item.nodeid)


def pytest_runtest_logreport(report):
    for entry in _CRITERIA.values():
        if report.nodeid in entry["nodes"]:
            if report.failed or report.skipped:
                entry["failed"].add(report.nodeid)
            if report.when == "call" or report.failed or report.skipped:
                entry["seen"].add(report.nodeid)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_CRITERIA):
        e = _CRITERIA[num]
        if not e["seen"]:
            status = "NOT RUN"
        elif e["failed"] or e["seen"] != e["nodes"]:
            status = "FAIL"
        else:
            status = "PASS"
        terminalreporter.write_line(f"criterion {num:2d} {status:7s} {e['title']} ({len(e['seen'])}/{len(e['nodes'])} tests)")


@pytest.fixture
def rng():
    import numpy as np

    return np.random.default_rng(1234)

"""Shared fixtures and the suite-wide objective monitor.

Every trace appended in this process is checked against its previous entry,
so the acceptance check on objective monotonicity sees every iteration of
every fit run by the suite. Tests marked ``suite_end`` run after all others.
"""

import math

import pytest

import lloydkit.metrics as metrics

OBJECTIVE_RTOL = 1e-9
OBJECTIVE_LOG = {"traces": 0, "steps": 0, "violations": []}
ACCEPTANCE_LINES = []

_append = metrics.ConvergenceTrace.append


def _monitored_append(self, iteration, cluster_metrics, elapsed_ms):
    if not self.entries:
        OBJECTIVE_LOG["traces"] += 1
    else:
        prev = self.entries[-1].metrics.objective
        cur = cluster_metrics.objective
        if not (math.isnan(prev) or math.isnan(cur)):
            OBJECTIVE_LOG["steps"] += 1
            if cur > prev + OBJECTIVE_RTOL * abs(prev):
                OBJECTIVE_LOG["violations"].append((iteration, prev, cur))
    _append(self, iteration, cluster_metrics, elapsed_ms)


metrics.ConvergenceTrace.append = _monitored_append


def pytest_configure(config):
    config.addinivalue_line("markers", "suite_end: run after every other test")


def pytest_collection_modifyitems(session, config, items):
    items.sort(key=lambda item: item.get_closest_marker("suite_end") is not None)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def out_dir(tmp_path, monkeypatch):
    monkeypatch.delenv("LLOYDKIT_OUT", raising=False)
    return tmp_path

from __future__ import annotations

import os
from pathlib import Path

import pytest
from hypothesis import settings

from uamflow import optimizer
from uamflow.scenario import compile_scenario, load_scenario

ROOT = Path(__file__).resolve().parents[1]
SCENARIOS = ROOT / "scenarios"
PLANS = ROOT / "plans"

settings.register_profile("default", deadline=None, max_examples=100)
settings.register_profile("ci", deadline=None, max_examples=300)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


# Every CCP iterate of the session, for the conservative-feasibility check.
CCP_ITERATES: list[tuple[float, float, float, float, bool]] = []


def _record(spec, it):
    CCP_ITERATES.append((it.max_increase, spec.delta_n_max, it.mean_increase, spec.m_u, it.within_caps))


optimizer.iterate_observers.append(_record)


@pytest.fixture(scope="session")
def austin():
    return compile_scenario(load_scenario(SCENARIOS / "austin_like.toml"))


@pytest.fixture(scope="session")
def minimal():
    return compile_scenario(load_scenario(SCENARIOS / "minimal.toml"))


# --------------------------------------------------------------------------
# acceptance report: one pass/fail line per criterion

_ACCEPTANCE: dict[int, tuple[str, str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


def pytest_collection_modifyitems(items):
    # the iterate-audit criterion must observe every other CCP run first
    def last(item):
        marker = item.get_closest_marker("criterion")
        return marker is not None and marker.args[0] == 8

    items.sort(key=last)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    number, title = marker.args
    if report.when == "call" or (report.when == "setup" and report.failed):
        detail = ""
        if report.failed:
            detail = str(report.longrepr.reprcrash.message) if hasattr(report.longrepr, "reprcrash") else "error"
            detail = detail.splitlines()[0][:160]
        _ACCEPTANCE[number] = ("PASS" if report.passed else "FAIL", title, detail)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        status, title, detail = _ACCEPTANCE[number]
        line = f"[{status}] criterion {number}: {title}"
        if detail:
            line += f" ({detail})"
        terminalreporter.write_line(line)

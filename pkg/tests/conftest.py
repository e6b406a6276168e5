from __future__ import annotations

import time

import pytest

from rdexact.scenario import SHIPPED_CONFIG, load_config, run_scenario

ACCEPTANCE_LINES: dict[int, str] = {}


@pytest.fixture(scope="session")
def shipped():
    return {s.name: s for s in load_config(SHIPPED_CONFIG)}


@pytest.fixture(scope="session")
def shipped_timed(shipped):
    """Every shipped scenario built, verified and cross-checked once per session."""
    runs, seconds = {}, {}
    for name, s in shipped.items():
        start = time.perf_counter()
        runs[name] = run_scenario(s, keep=True)
        seconds[name] = time.perf_counter() - start
    return runs, seconds


@pytest.fixture(scope="session")
def shipped_runs(shipped_timed):
    return shipped_timed[0]


@pytest.fixture
def record_criterion():
    def record(number: int, ok: bool, detail: str) -> None:
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES[number] = line
        print(line)
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[n])

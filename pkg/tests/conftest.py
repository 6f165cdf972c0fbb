"""Test-session plumbing.

The acceptance module gets a dedicated terminal summary: one PASS/FAIL line
per criterion, printed after the run regardless of capture settings.
"""

from __future__ import annotations

_acceptance_results: dict[str, bool] = {}


def pytest_runtest_logreport(report):
    if report.when != "call" or "test_acceptance.py" not in report.nodeid:
        return
    _acceptance_results[report.nodeid] = report.passed


def pytest_terminal_summary(terminalreporter):
    if not _acceptance_results:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for nodeid in sorted(_acceptance_results):
        verdict = "PASS" if _acceptance_results[nodeid] else "FAIL"
        terminalreporter.write_line(f"{verdict}  {nodeid.split('::')[-1]}")

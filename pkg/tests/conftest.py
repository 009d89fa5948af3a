"""Shared test infrastructure: acceptance criterion reporting."""

from __future__ import annotations

ACCEPTANCE_RESULTS: dict[str, tuple[bool, str]] = {}


def record_criterion(number, description: str, passed: bool, detail: str = ""):
    """Register one acceptance criterion outcome for the terminal summary."""
    key = f"{number}"
    note = f"{description}" + (f" [{detail}]" if detail else "")
    ACCEPTANCE_RESULTS[key] = (bool(passed), note)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_RESULTS, key=lambda s: (len(s), s)):
        passed, note = ACCEPTANCE_RESULTS[key]
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"criterion {key:>3}: {status} - {note}")

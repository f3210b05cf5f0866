"""Collects the acceptance verdicts and prints them after the run."""

import pytest

_VERDICTS = []


@pytest.fixture
def verdict():
    """``verdict(number, ok, detail)`` records one acceptance line."""

    def record(number, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'} criterion {number:>2}: {detail}"
        _VERDICTS.append((number, line))
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not _VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(_VERDICTS):
        terminalreporter.write_line(line)

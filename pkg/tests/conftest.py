"""Shared pytest hooks.

Acceptance tests record one PASS/FAIL line per criterion; the terminal
summary echoes them after the run so they survive output capture.
"""

_criterion_lines = []


def record_criterion(line: str) -> None:
    print(line, flush=True)
    _criterion_lines.append(line)


def pytest_terminal_summary(terminalreporter):
    if not _criterion_lines:
        return
    terminalreporter.section("acceptance criteria")
    for line in _criterion_lines:
        terminalreporter.write_line(line)

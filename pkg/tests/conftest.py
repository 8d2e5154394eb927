"""Shared pytest wiring: the acceptance verdict ledger.

Acceptance tests append one verdict line each; printing them in the
terminal summary keeps them visible even though pytest captures stdout
of passing tests.
"""

acceptance_lines: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in acceptance_lines:
            terminalreporter.write_line(line)

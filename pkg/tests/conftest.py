"""Shared test plumbing: collect acceptance-criterion verdict lines and echo
them in the terminal summary so the pass/fail status of each criterion is
visible in one place."""

ACCEPTANCE_LINES = []


def record_criterion(number: int, passed: bool, detail: str):
    verdict = "PASS" if passed else "FAIL"
    line = f"criterion {number}: {verdict} - {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line, flush=True)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)

"""Shared pytest plumbing.

Acceptance tests register one result per criterion via record_result();
a terminal-summary hook prints one pass/fail line per criterion at the
end of the session so the verdicts are visible even under output capture.
"""

ACCEPTANCE_RESULTS: dict[int, tuple[bool, str]] = {}


def record_result(criterion: int, passed: bool, detail: str = "") -> None:
    ACCEPTANCE_RESULTS[criterion] = (passed, detail)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE_RESULTS):
        passed, detail = ACCEPTANCE_RESULTS[num]
        verdict = "PASS" if passed else "FAIL"
        line = f"criterion {num:2d}: {verdict}"
        if detail:
            line += f"  ({detail})"
        terminalreporter.write_line(line)

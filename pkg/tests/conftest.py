"""Shared test configuration: acceptance-result collection and reporting."""

CRITERIA: dict[int, tuple[bool, str]] = {}


def record_criterion(num: int, passed: bool, detail: str):
    """Stash one acceptance criterion's outcome for the terminal summary."""
    CRITERIA[num] = (bool(passed), detail)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(CRITERIA):
        passed, detail = CRITERIA[num]
        word = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"[criterion {num}] {word} - {detail}")

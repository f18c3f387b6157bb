"""Shared test helpers.

The acceptance tests register one verdict line per criterion; the hook below
prints them as a block at the end of the run so the gate is readable at a
glance even inside a long -v listing.
"""

_criterion_lines: dict[int, str] = {}


def record_criterion(number: int, passed: bool, detail: str) -> None:
    verdict = "PASS" if passed else "FAIL"
    _criterion_lines[number] = f"CRITERION {number:2d}: {verdict}  {detail}"


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _criterion_lines:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criterion_lines):
        terminalreporter.write_line(_criterion_lines[number])

import pytest

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def report(request):
    """Record one PASS/FAIL line for an acceptance criterion.

    Usage: ``report(number, passed, detail)``; the line is printed immediately
    and again in the terminal summary.
    """
    def _report(number: int, passed: bool, detail: str) -> None:
        line = f"criterion {number}: {'PASS' if passed else 'FAIL'} - {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)

    return _report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)

import pytest

ACCEPTANCE_LINES = []


@pytest.fixture
def report():
    """Record one PASS/FAIL line for an acceptance criterion."""

    def _report(number, ok, detail):
        line = f"CRITERION {number}: {'PASS' if ok else 'FAIL'} - {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return _report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

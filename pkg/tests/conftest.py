import pytest

CRITERION_LINES: dict[int, str] = {}


@pytest.fixture
def record_criterion():
    def record(number: int, line: str) -> None:
        CRITERION_LINES[number] = line

    return record


def pytest_terminal_summary(terminalreporter):
    if CRITERION_LINES:
        terminalreporter.section("acceptance criteria")
        for number in sorted(CRITERION_LINES):
            terminalreporter.write_line(CRITERION_LINES[number])

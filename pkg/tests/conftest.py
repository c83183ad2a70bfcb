import pytest

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def report():
    def add(line: str):
        ACCEPTANCE_LINES.append(line)
        print(line)

    return add


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[0].strip("[]#"))):
            terminalreporter.write_line(line)

import pytest

_LINES = []


@pytest.fixture
def report():
    """Record one summary line per acceptance criterion."""

    def add(label, ok, detail=""):
        _LINES.append(f"{label}: {'PASS' if ok else 'FAIL'}  {detail}".rstrip())
        return ok

    return add


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in _LINES:
            terminalreporter.write_line(line)

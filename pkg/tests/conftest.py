import pytest

_REPORT: list[str] = []


@pytest.fixture(scope="session")
def report():
    """Collects one PASS/FAIL line per acceptance criterion."""

    def add(name: str, ok: bool, detail: str) -> None:
        _REPORT.append(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")

    return add


def pytest_terminal_summary(terminalreporter):
    if _REPORT:
        terminalreporter.section("acceptance criteria")
        for line in _REPORT:
            terminalreporter.write_line(line)

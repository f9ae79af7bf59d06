import pathlib

import pytest

SCENARIOS = pathlib.Path(__file__).resolve().parent.parent / "scenarios"
_CRITERIA: dict = {}


@pytest.fixture
def scenario_dir():
    return SCENARIOS


@pytest.fixture
def criterion(request):
    """Record one acceptance criterion verdict; the line is printed in the terminal summary."""

    def report(number: int, ok: bool, detail: str) -> None:
        verdict = "PASS" if ok else "FAIL"
        line = f"criterion {number:>2}: {verdict}  {detail}"
        _CRITERIA[number] = line
        print(line)
        assert ok, line

    return report


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for number in sorted(_CRITERIA):
            terminalreporter.write_line(_CRITERIA[number])

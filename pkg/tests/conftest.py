import pathlib
import sys

import pytest

# the reference implementations in tests/oracles.py are imported as a plain module
sys.path.insert(0, str(pathlib.Path(__file__).parent))

_LINES = []


@pytest.fixture
def acceptance():
    """Record one PASS/FAIL line per acceptance criterion; printed in the terminal summary."""
    def record(number, text, passed):
        line = f"{'PASS' if passed else 'FAIL'}  criterion {number:>2}: {text}"
        _LINES.append((number, line))
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(_LINES):
            terminalreporter.write_line(line)

import sys
from pathlib import Path

import pytest

# shared oracles live next to the tests
sys.path.insert(0, str(Path(__file__).parent))


@pytest.fixture
def configs_dir():
    return Path(__file__).parent.parent / "configs"


ACCEPTANCE_LINES = []


@pytest.fixture
def criterion():
    """Record one PASS/FAIL line for an acceptance criterion."""
    def record(number, title, passed, detail):
        ACCEPTANCE_LINES.append((number, f"{'PASS' if passed else 'FAIL'} criterion {number:>2} "
                                         f"{title}: {detail}"))
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(line)

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

# criterion number -> (title, passed, detail); filled by test_acceptance
ACCEPTANCE: dict = {}


@pytest.fixture
def criterion():
    def record(number, title, passed, detail="", status=None):
        status = status or ("PASS" if passed else "FAIL")
        line = f"criterion {number} {status}: {title} ({detail})"
        ACCEPTANCE[number] = line
        print(line)
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE, key=str):
            terminalreporter.write_line(ACCEPTANCE[n])

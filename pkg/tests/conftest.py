from pathlib import Path

import numpy as np
import pytest

GOLDEN = Path(__file__).parent / "golden"

# filled by test_acceptance.py, printed after the run
ACCEPTANCE: dict = {}


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def golden():
    def read(name):
        return (GOLDEN / name).read_text()

    return read


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"criterion {key:>2}: {'PASS' if ok else 'FAIL'}  {detail}")

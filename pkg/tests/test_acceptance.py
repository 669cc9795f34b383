"""The fifteen acceptance criteria at their stated tolerances.

Each test prints one PASS/FAIL line; the lines are repeated in the terminal
summary. Criteria 12 to 15 compare against calibrated thresholds.
"""

import pytest

from quadlevel.acceptance import CRITERIA, run_criterion
from quadlevel.config import load_config

LINES: dict[int, str] = {}


@pytest.fixture(scope="module")
def cfg():
    return load_config()


@pytest.mark.parametrize("number", sorted(CRITERIA), ids=lambda n: f"C{n:02d}")
def test_criterion(number, cfg):
    result = run_criterion(number, cfg)
    LINES[number] = result.line()
    print(result.line())
    assert result.passed, result.line()

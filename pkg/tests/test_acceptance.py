"""End-to-end acceptance checks, one test per criterion.

Each test prints its pass/fail line; the lines are repeated in the pytest
terminal summary so a full run shows all of them together.
"""

import pytest

from cornerindex import acceptance

LINES: dict[int, str] = {}


@pytest.mark.parametrize("criterion", acceptance.CRITERIA, ids=lambda c: c.__name__)
def test_criterion(criterion):
    res = criterion()
    LINES[res.number] = res.line()
    print(res.line())
    assert res.passed, res.line()

"""One test per acceptance criterion; each prints a PASS/FAIL line.

The thresholds below restate the pass conditions so that a change inside
``verification`` cannot silently loosen them.
"""

import math

import pytest

from asl2lab.verification import CRITERIA

# criterion -> (detail key, predicate)
PINNED = {
    1: [("full", lambda v: v < 1e-9), ("primitive", lambda v: v < 1e-9), ("row_sum", lambda v: v < 1e-9)],
    2: [("assoc", lambda v: v < 1e-10), ("inverse", lambda v: v < 1e-10), ("conj", lambda v: v < 1e-12), ("cartan", lambda v: v < 1e-9)],
    3: [("area", lambda v: abs(v - math.pi / 3) < 1e-6)],
    5: [("slope", lambda v: v <= -0.5)],
    6: [("slope", lambda v: v <= -0.5)],
    7: [("delta", lambda v: v >= 0.2)],
    8: [("delta", lambda v: v >= 0.15)],
    9: [("delta", lambda v: v >= 0.1)],
    10: [("ratio", lambda v: v >= 10)],
    11: [("trig", lambda v: v < 1e-8), ("twisted", lambda v: v < 1e-8)],
}


@pytest.mark.slow
@pytest.mark.parametrize("number", sorted(CRITERIA), ids=lambda n: f"criterion_{n:02d}")
def test_criterion(number, record_criterion):
    res = CRITERIA[number]()
    print(res.line)
    record_criterion(number, res.line)
    for key, check in PINNED.get(number, []):
        assert check(res.details[key]), f"{key} = {res.details[key]!r}"
    if number == 4:
        assert max(max(pair) for pair in res.details["ratios"].values()) <= 50
    assert res.runtime_s < res.budget_s
    assert res.passed, res.line

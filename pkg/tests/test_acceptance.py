"""Acceptance criteria at full size, one test per criterion.

Every result line is also printed in the terminal summary.  Set
``LCSKETCH_ACCEPTANCE_TRIALS`` to cap the trial counts for a quick run.
"""

import os

import pytest

from lcsketch.acceptance import CHECKS, Sizes

RESULTS = []


def _sizes() -> Sizes:
    cap = os.environ.get("LCSKETCH_ACCEPTANCE_TRIALS")
    return Sizes() if not cap else Sizes.reduced(int(cap))


@pytest.mark.acceptance
@pytest.mark.parametrize("key", list(CHECKS))
def test_criterion(key):
    index = list(CHECKS).index(key)
    r = CHECKS[key](_sizes(), index)
    RESULTS.append(r)
    print(r.line())
    if not r.informational:
        assert r.passed, r.line()

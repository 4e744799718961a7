import random

import pytest
from hypothesis import given, strategies as st

from lcsketch.oracle_testkit import (
    INF,
    Edit,
    EditScript,
    banded_edit_distance,
    decompose_trace,
    edit_distance_dp,
    expand_symbol,
    random_edits,
)


def naive_ed(x, y):
    prev = list(range(len(y) + 1))
    for i, a in enumerate(x, 1):
        cur = [i]
        for j, b in enumerate(y, 1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a != b)))
        prev = cur
    return prev[-1]


small = st.lists(st.integers(0, 3), max_size=40)


@pytest.mark.parametrize(
    "x, y, d",
    [("kitten", "sitting", 3), ("", "abc", 3), ("abc", "", 3), ("flaw", "lawn", 2), ("same", "same", 0)],
)
def test_dp_examples(x, y, d):
    assert edit_distance_dp([ord(c) for c in x], [ord(c) for c in y]) == d


@given(small, small)
def test_dp_matches_naive(x, y):
    assert edit_distance_dp(x, y) == naive_ed(x, y)


@given(small, small, st.integers(0, 8))
def test_banded_matches_dp(x, y, cutoff):
    d = naive_ed(x, y)
    assert banded_edit_distance(x, y, cutoff) == (d if d <= cutoff else INF)


def test_banded_on_long_random_pairs():
    rng = random.Random(1)
    for _ in range(30):
        x = [rng.randrange(4) for _ in range(rng.randint(0, 600))]
        y, _ = random_edits(x, rng.randint(0, 10), rng, sigma=4)
        d = edit_distance_dp(x, y)
        assert banded_edit_distance(x, y, 6) == (d if d <= 6 else INF)


def test_dp_refuses_huge_inputs():
    with pytest.raises(ValueError):
        edit_distance_dp([0] * 10_001, [0])


def test_random_edits_script_replays():
    rng = random.Random(2)
    for _ in range(50):
        x = [rng.randrange(26) for _ in range(rng.randint(0, 50))]
        k = rng.randint(0, 8)
        y, script = random_edits(x, k, rng, sigma=26)
        assert len(script) == k
        assert script.apply(x) == y
        assert edit_distance_dp(x, y) <= k


def test_edit_script_apply():
    s = EditScript((Edit(0, "ins", 9), Edit(2, "sub", 7), Edit(3, "del", None)))
    assert s.apply([1, 2, 3]) == (9, 1, 7)


def test_trace_expands_to_input(stress_bundle):
    rng = random.Random(3)
    al = stress_bundle.alphabet
    for _ in range(10):
        x = tuple(rng.randrange(4) for _ in range(rng.randint(1, 400)))
        tr = decompose_trace(x, stress_bundle)
        flat = sum((expand_symbol(s, tr.rules, al) for _, _, B in tr.finals for s in B), ())
        assert flat == x
        assert sum(tr.levels[0], ()) == x
        assert tr.dump().startswith("level 0:")


def test_trace_of_empty(stress_bundle):
    tr = decompose_trace((), stress_bundle)
    assert tr.finals == []

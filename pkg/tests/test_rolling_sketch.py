import random

import pytest

from lcsketch import bundle_generate, derive_params
from lcsketch.decomposition import decompose
from lcsketch.grammar_ops import INF
from lcsketch.hamming_sketch import IncomparableSketches
from lcsketch.hashing import copy_bundles
from lcsketch.oracle_testkit import edit_distance_dp, random_edits
from lcsketch.rolling_sketch import (
    AmplifiedRolling,
    RollingSketch,
    rolling_append,
    rolling_compare,
    rolling_new,
    rolling_remove,
)

from conftest import random_string


def window(bundle, prefix, body, debug=True):
    sk = rolling_new(bundle.params, bundle, debug=debug)
    for c in list(prefix) + list(body):
        rolling_append(sk, c)
    for c in prefix:
        rolling_remove(sk, c)
    return sk


def held(side):
    return [c.grammar for c in side.ring] + list(side.active)


def test_insertion_side_tracks_the_decomposition(stress_bundle):
    rng = random.Random(1)
    x = random_string(rng, 500, sigma=4)
    sk = rolling_new(stress_bundle.params, stress_bundle)
    for i, c in enumerate(x):
        rolling_append(sk, c)
        if i % 100 == 99:
            full = decompose(x[: i + 1], stress_bundle)
            first = sk.ins.count - len(sk.ins.ring)
            assert full[first:] == held(sk.ins)
            assert len(full) == sk.ins.count + len(sk.ins.active)
    # enough commits that grammars have been folded into the sketch
    assert sk.ins.count > 2 * stress_bundle.params.T
    assert sk.failure is None


def test_same_window_after_different_prefixes(stress_bundle):
    rng = random.Random(2)
    body = random_string(rng, 400, sigma=4)
    a = window(stress_bundle, random_string(rng, 300, sigma=4), body)
    b = window(stress_bundle, random_string(rng, 150, sigma=4), body)
    assert rolling_compare(a, b) == 0


def test_answers_are_exact_or_inf(stress_bundle):
    rng = random.Random(3)
    k = stress_bundle.params.k
    answered = 0
    for _ in range(4):
        x = random_string(rng, rng.randint(100, 500), sigma=4)
        y, _ = random_edits(x, rng.randint(0, k + 1), rng, sigma=4)
        a = window(stress_bundle, random_string(rng, rng.randint(0, 300), sigma=4), x)
        b = window(stress_bundle, random_string(rng, rng.randint(0, 300), sigma=4), y)
        d = edit_distance_dp(x, y)
        got = rolling_compare(a, b)
        if got != INF:
            answered += 1
            assert got == d
        elif d <= k:
            assert a.failure or b.failure or abs(a.spread - b.spread) > 0
    assert answered >= 2


def test_aligned_branch_with_insertions():
    # windows of several hundred grammars take the right-aligned comparison;
    # each insertion here shifts the grammar pairing by one to its left
    from lcsketch.acceptance import stress_params

    P = stress_params(4096, 3, T=32)
    rng = random.Random(1)
    b = bundle_generate(P, 1)
    x = [rng.randrange(4) for _ in range(1100)]
    y = list(x)
    y.insert(300, 1)
    y.insert(800, 2)
    a = window(b, [rng.randrange(4) for _ in range(200)], x, debug=False)
    c = window(b, [rng.randrange(4) for _ in range(450)], y, debug=False)
    assert min(a.spread, c.spread) >= 10 * P.T
    assert rolling_compare(a, c) == edit_distance_dp(x, y) == 2


def test_kitten_sitting_on_desk_params():
    P = derive_params(1024, 6)
    b = bundle_generate(P, 3)
    enc = lambda s: [ord(c) for c in s]
    assert rolling_compare(window(b, enc("the "), enc("kitten")), window(b, enc("a "), enc("sitting"))) == 3


def test_append_then_remove_everything(desk_bundle):
    sk = window(desk_bundle, [], [])
    other = window(desk_bundle, [1, 2, 3], [])
    assert sk.length == other.length == 0
    assert rolling_compare(sk, other) == 0
    assert rolling_compare(sk, window(desk_bundle, [], [5, 6])) == 2


def test_length_gap_above_k_is_inf(desk_bundle):
    k = desk_bundle.params.k
    assert rolling_compare(window(desk_bundle, [], [1] * 10), window(desk_bundle, [], [1] * (11 + k))) == INF


def test_debug_mode_catches_a_wrong_remove(desk_bundle):
    sk = window(desk_bundle, [], [1, 2, 3])
    with pytest.raises(ValueError):
        rolling_remove(sk, 2)
    rolling_remove(sk, 1)
    assert sk.length == 2


def test_input_checks(desk_bundle):
    sk = rolling_new(desk_bundle.params, desk_bundle)
    with pytest.raises(ValueError):
        rolling_remove(sk, 0)
    with pytest.raises(ValueError):
        rolling_append(sk, desk_bundle.params.sigma_size)
    with pytest.raises(ValueError):
        rolling_new(derive_params(128, 4), desk_bundle)


def test_serialization_round_trip(stress_bundle):
    rng = random.Random(4)
    body = random_string(rng, 200, sigma=4)
    sk = window(stress_bundle, random_string(rng, 100, sigma=4), body, debug=False)
    back = RollingSketch.from_bytes(sk.to_bytes(), stress_bundle)
    assert back.to_bytes() == sk.to_bytes()
    y = list(body)
    y[50] = (y[50] + 1) % 4
    other = window(stress_bundle, [], y)
    assert rolling_compare(back, other) == rolling_compare(sk, other)
    # the restored sketch keeps rolling
    rolling_append(back, 1)
    rolling_append(sk, 1)
    assert back.to_bytes() == sk.to_bytes()


def test_other_bundle_is_refused(desk, desk_bundle):
    other = bundle_generate(desk, 99)
    with pytest.raises(IncomparableSketches):
        rolling_compare(window(desk_bundle, [], [1]), window(other, [], [1]))
    with pytest.raises(IncomparableSketches):
        RollingSketch.from_bytes(window(desk_bundle, [], [1]).to_bytes(), other)


def test_amplified_copies_vote(desk_bundle):
    bundles = copy_bundles(desk_bundle, 3)
    a, b = AmplifiedRolling.new(bundles), AmplifiedRolling.new(bundles)
    for c in [1, 2, 3, 4, 5]:
        a.append(c)
    for c in [9, 1, 2, 4, 5]:
        b.append(c)
    b.remove(9)
    assert a.compare(b) == 1
    snap = a.snapshot()
    a.remove(1)
    assert snap.compare(b) == 1
    with pytest.raises(ValueError):
        a.compare(AmplifiedRolling.new(bundles[:2]))

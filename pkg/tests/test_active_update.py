import random

import pytest

from lcsketch.active_update import update_active_grammars
from lcsketch.decomposition import DecompositionError, decompose
from lcsketch.grammar_ops import eval_grammar

from conftest import random_string


def incremental(before, a, bundle):
    T = bundle.params.T
    ctx = before[len(before) - min(len(before), T + 1):]
    return before[: len(before) - len(ctx)] + update_active_grammars(ctx, a, bundle)


def check_step(x, a, bundle):
    assert incremental(decompose(x, bundle), a, bundle) == decompose(x + [a], bundle)


def test_first_symbol(desk_bundle):
    assert update_active_grammars([], 7, desk_bundle) == decompose([7], desk_bundle)


@pytest.mark.parametrize("x, a", [([0], 0), ([0, 1], 0), ([0, 1, 0], 1), ([0] * 100, 0), ([0] * 100, 1)])
def test_small_examples(desk_bundle, x, a):
    check_step(x, a, desk_bundle)


def test_growing_a_run(stress_bundle):
    x = [2] * 5
    for _ in range(100):
        check_step(x, 2, stress_bundle)
        x.append(2)


def test_symbol_by_symbol_matches_decompose(stress_bundle):
    rng = random.Random(7)
    x = random_string(rng, 300, sigma=4)
    gs = []
    for i, a in enumerate(x):
        gs = incremental(gs, a, stress_bundle)
        if i % 25 == 0:
            assert gs == decompose(x[: i + 1], stress_bundle)
    assert gs == decompose(x, stress_bundle)
    assert sum((eval_grammar(G) for G in gs), ()) == tuple(x)


def test_random_appends_under_stress(stress_bundle):
    rng = random.Random(8)
    checked = 0
    for _ in range(25):
        x = random_string(rng, rng.randint(50, 700))
        a = rng.choice(x)
        try:
            check_step(x, a, stress_bundle)
        except DecompositionError:
            continue
        checked += 1
    assert checked >= 20


def test_run_heavy_strings(stress_bundle):
    rng = random.Random(9)
    for _ in range(10):
        x = []
        while len(x) < 400:
            x += [rng.randrange(3)] * rng.choice((1, 1, 2, 5, 30))
        check_step(x, x[-1], stress_bundle)
        check_step(x, (x[-1] + 1) % 3, stress_bundle)


def test_rejects_symbol_outside_alphabet(desk_bundle):
    with pytest.raises(ValueError):
        update_active_grammars([], desk_bundle.params.sigma_size, desk_bundle)

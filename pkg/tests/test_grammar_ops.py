import random

import pytest
from hypothesis import given, strategies as st

from lcsketch import bundle_generate, derive_params
from lcsketch.decomposition import decompose
from lcsketch.grammar_ops import (
    INF,
    CyclicGrammar,
    EvalBudgetExceeded,
    UndefinedSymbol,
    dump_grammar,
    eval_grammar,
    eval_size,
    grammar_pair_ed,
    make_grammar,
    parse_grammar,
    prune,
    suffix_grammar,
)
from lcsketch.oracle_testkit import edit_distance_dp

from conftest import random_string

P = derive_params(256, 4)
BUNDLE = bundle_generate(P, 11)
AL = BUNDLE.alphabet


def one_grammar(x):
    (G,) = decompose(x, BUNDLE)
    return G


def hand_grammar():
    # c -> a b, d -> c c, start: d (c)^3 b
    c, d = AL.comp(1, 5), AL.comp(2, 9)
    return make_grammar([d, AL.repeat(c, 3), 1], {c: (0, 1), d: (c, c)}, AL), c, d


def test_eval_of_hand_grammar():
    G, _, _ = hand_grammar()
    assert eval_grammar(G) == (0, 1) * 5 + (1,)
    assert eval_size(G) == 11
    # start rule, two pair rules, one repeat rule
    assert G.size == 4


def test_errors():
    c = AL.comp(1, 1)
    with pytest.raises(UndefinedSymbol):
        eval_grammar(make_grammar([c], {}, AL))
    d = AL.comp(1, 2)
    with pytest.raises(CyclicGrammar):
        eval_size(make_grammar([c], {c: (d, 0), d: (c, 0)}, AL))
    G, _, _ = hand_grammar()
    with pytest.raises(EvalBudgetExceeded):
        eval_grammar(G, budget=5)


def test_prune_drops_unreachable_rules():
    G, c, d = hand_grammar()
    extra = AL.comp(3, 77)
    H = make_grammar(G.start, {**G.rules, extra: (2, 3)}, AL)
    assert prune(H) == G


@given(st.lists(st.integers(0, 3), min_size=1, max_size=200), st.data())
def test_suffix_matches_slice(x, data):
    G = one_grammar(x)
    m = data.draw(st.integers(1, len(x) + 1))
    S = suffix_grammar(G, m)
    assert eval_grammar(S) == tuple(x[m - 1:])
    assert S.size <= 2 * G.size + 2 * P.L + 2


def test_suffix_range_checked():
    G, _, _ = hand_grammar()
    with pytest.raises(ValueError):
        suffix_grammar(G, 0)
    with pytest.raises(ValueError):
        suffix_grammar(G, 13)


def test_suffix_of_repeat_keeps_a_shortened_repeat():
    (G,) = decompose([4] * 50, BUNDLE)
    S = suffix_grammar(G, 8)
    assert eval_grammar(S) == (4,) * 43
    assert S.start == (AL.repeat(4, 43),)


def joined(x):
    """All grammars of x merged into one."""
    start, rules = [], {}
    for G in decompose(x, BUNDLE):
        start += G.start
        rules.update(G.rules)
    return make_grammar(start, rules, AL)


def test_pair_ed_matches_dp(rng):
    for _ in range(40):
        x = random_string(rng, rng.randint(0, 120), sigma=4)
        y = list(x)
        for _ in range(rng.randint(0, 6)):
            i = rng.randrange(len(y) + 1)
            y.insert(i, rng.randrange(4))
        d = edit_distance_dp(x, y)
        got = grammar_pair_ed(joined(x), joined(y), 4)
        assert got == (d if d <= 4 else INF)


def test_dump_parse_round_trip(rng):
    for _ in range(20):
        G = one_grammar(random_string(rng, rng.randint(1, 200)))
        text = dump_grammar(G)
        assert parse_grammar(text, AL) == G
    with pytest.raises(ValueError):
        parse_grammar("1 2 3", AL)

import dataclasses
import random

import numpy as np
import pytest
from hypothesis import given, strategies as st

from lcsketch import bundle_generate, derive_params
from lcsketch.decomposition import decompose
from lcsketch.encoding import (
    Undecodable,
    all_ones,
    bin_encode,
    context_fingerprint,
    decode_columns,
    decode_enc,
    enc,
    geometric_sum,
    grammar_records,
    pack_width,
)
from lcsketch.grammar_ops import make_grammar
from lcsketch.hashing import Bits

from conftest import random_string

# tiny parameters so that a whole M-symbol encoding can be materialized
TINY = dataclasses.replace(derive_params(8, 1, sigma_size=4), S=6, M=3 * 6 * 20)
TINY_BUNDLE = bundle_generate(TINY, 3)


def tiny_grammars():
    rng = random.Random(0)
    out = []
    while len(out) < 30:
        x = [rng.randrange(4) for _ in range(rng.randint(1, 8))]
        out += [G for G in decompose(x, TINY_BUNDLE) if G.size <= TINY.S]
    return out


def test_records_sorted_with_start_last(desk_bundle):
    (G,) = decompose([0, 1, 2, 0, 1, 2, 2, 2], desk_bundle)
    recs = grammar_records(G, desk_bundle.params)
    ones = all_ones(desk_bundle.params)
    assert recs == sorted(recs)
    assert recs[-1][0] == ones
    assert len(recs) == G.size


def test_oversize_when_start_is_long(desk_bundle):
    P = desk_bundle.params
    G = make_grammar([0, 1, 2], {}, desk_bundle.alphabet)
    e = enc(G, P, desk_bundle.kr)
    assert e.oversize and e.tail_value == 1
    assert e.symbol(0) == 1 and e.symbol(P.M - 1) == 1


def test_oversize_when_too_many_rules():
    al = TINY_BUNDLE.alphabet
    rules = {al.comp(1, i): (0, 1) for i in range(TINY.S)}
    G = make_grammar([al.comp(1, 0)], rules, al)
    assert bin_encode(G, TINY).oversize


def test_full_round_trip_on_tiny_params():
    key = TINY_BUNDLE.kr
    for G in tiny_grammars():
        e = enc(G, TINY, key)
        symbols = e.to_list()
        assert len(symbols) == TINY.M
        assert all(1 <= s <= 2 * TINY.N for s in symbols)
        assert decode_enc(symbols, TINY, key, TINY_BUNDLE.alphabet) == G


def test_corrupted_symbol_is_undecodable():
    key = TINY_BUNDLE.kr
    G = tiny_grammars()[5]
    symbols = enc(G, TINY, key).to_list()
    # flip one bit: the fingerprint no longer matches the bits
    i = 3
    symbols[i] = symbols[i] + TINY.N if symbols[i] <= TINY.N else symbols[i] - TINY.N
    assert isinstance(decode_enc(symbols, TINY, key, TINY_BUNDLE.alphabet), Undecodable)
    # a symbol with a different fingerprint
    symbols = enc(G, TINY, key).to_list()
    symbols[7] = symbols[7] % TINY.N + 1
    assert not decode_enc(symbols, TINY, key, TINY_BUNDLE.alphabet)


def test_all_ones_is_undecodable():
    r = decode_enc([1] * TINY.M, TINY, TINY_BUNDLE.kr, TINY_BUNDLE.alphabet)
    assert isinstance(r, Undecodable) and "1^M" in r.reason
    assert not decode_enc([1] * 5, TINY, TINY_BUNDLE.kr, TINY_BUNDLE.alphabet)


@given(st.integers(1, 16))
def test_packed_columns_round_trip(group):
    rng = random.Random(group)
    P = dataclasses.replace(derive_params(1024, 3), D=3, T=48)
    b = bundle_generate(P, 4)
    for G in decompose(random_string(rng, 120, sigma=4), b)[:5]:
        e = enc(G, P, b.kr)
        cols = e.packed_values(group)
        back = decode_columns(cols, e.tail_value, P, b.kr, b.alphabet, group=group)
        assert back == G


def test_pack_width_fits_field(desk):
    g = pack_width(desk)
    assert desk.N << g < desk.p
    assert desk.N << (g + 1) >= min(desk.p, 1 << 62)


def test_hamming_between_encodings():
    key = TINY_BUNDLE.kr
    gs = tiny_grammars()
    a = enc(gs[0], TINY, key)
    assert a.hamming(a) == 0
    other = next(G for G in gs if G != gs[0])
    b = enc(other, TINY, key)
    expect = sum(x != y for x, y in zip(a.to_list(), b.to_list()))
    assert a.hamming(b) == expect == TINY.M


def test_geometric_sum_closed_form():
    q = 1_000_003
    for z in (1, 2, 12345):
        for start, stop in ((0, 0), (0, 5), (3, 40)):
            assert geometric_sum(z, start, stop, q) == sum(pow(z, i, q) for i in range(start, stop)) % q


def test_all_ones_poly_uses_closed_form():
    key = TINY_BUNDLE.kr
    G = make_grammar([0, 1, 2], {}, TINY_BUNDLE.alphabet)
    b = bin_encode(G, TINY)
    assert b.kr_poly(key) == key.poly(Bits.from_str("1" * TINY.M))


def test_context_fingerprint_is_kr_of_concatenation():
    key = TINY_BUNDLE.kr
    gs = tiny_grammars()[:3]
    bins = [bin_encode(G, TINY) for G in gs]
    full = Bits.from_str("".join("".join(map(str, b.to_bits())) for b in bins))
    assert context_fingerprint(bins, key, TINY.M) == key(full)
    # an empty slot is M zero bits
    zeros = Bits.from_str("0" * TINY.M)
    with_gap = Bits.from_str("".join(map(str, zeros)) + "".join(map(str, bins[0].to_bits())))
    assert context_fingerprint([None, bins[0]], key, TINY.M) == key(with_gap)

import dataclasses
import random

import pytest
from hypothesis import given, strategies as st

from lcsketch import bundle_generate, derive_params
from lcsketch.hashing import (
    Bits,
    RandomnessBundle,
    copy_bundles,
    derived_seed,
    kr_hash,
)


@pytest.fixture(scope="module")
def small():
    return derive_params(64, 2)


def test_same_seed_same_bundle(small):
    a = bundle_generate(small, 7)
    b = bundle_generate(small, 7)
    assert a == b
    assert a.to_bytes() == b.to_bytes()


def test_frozen_digests(small):
    assert bundle_generate(small, 7).digest == 386849989165502814
    assert bundle_generate(small, 8).digest == 1679221188923596905


def test_different_seeds_differ(small):
    a = bundle_generate(small, 7)
    b = bundle_generate(small, 8)
    assert a != b
    assert a.comp_coeffs != b.comp_coeffs


def test_serialize_round_trip(small):
    b = bundle_generate(small, 99)
    back = RandomnessBundle.from_bytes(b.to_bytes())
    assert back == b
    assert back.params == small
    assert back.digest == b.digest


def test_corrupted_bundle_rejected(small):
    data = bytearray(bundle_generate(small, 3).to_bytes())
    data[-1] ^= 1
    with pytest.raises(ValueError):
        RandomnessBundle.from_bytes(bytes(data))
    with pytest.raises(ValueError):
        RandomnessBundle.from_bytes(b"XXXX" + bytes(data[4:]))


def test_kr_of_empty_is_one(small):
    b = bundle_generate(small, 1)
    assert kr_hash("", b.kr) == 1
    assert b.kr_hash(Bits.from_str("")) == 1


@given(st.text(alphabet="01", max_size=200))
def test_kr_range_and_input_forms(s):
    b = bundle_generate(derive_params(64, 2), 2)
    v = kr_hash(s, b.kr)
    assert 1 <= v <= b.params.N
    assert v == kr_hash([int(c) for c in s], b.kr)


def test_kr_separates_strings(small):
    b = bundle_generate(small, 4)
    rng = random.Random(0)
    seen = {}
    for _ in range(2000):
        # trailing zeros add nothing to the polynomial, so end on a one
        s = "".join(rng.choice("01") for _ in range(rng.randint(0, 63))) + "1"
        seen.setdefault(kr_hash(s, b.kr), set()).add(s)
    assert all(len(v) == 1 for v in seen.values())


def test_kr_is_linear_in_appended_bits(small):
    b = bundle_generate(small, 5)
    kr = b.kr
    x, y = Bits.from_str("1101"), Bits.from_str("011")
    # poly(x + y) = poly(x) + z^|x| * poly(y)
    expect = (kr.poly(x) + pow(kr.z, len(x), kr.q) * kr.poly(y)) % kr.q
    assert kr.poly(x + y) == expect


def test_split_zero_hits_every_large_pair_set():
    # With D shrunk to 4 a set of split_count * D pairs is small enough to
    # test over many bundles; it must contain a zero in almost all of them.
    P = dataclasses.replace(derive_params(64, 2), D=4)
    m = P.split_count * P.D
    rng = random.Random(17)
    misses = 0
    bundles = 100
    for seed in range(bundles):
        b = bundle_generate(P, seed)
        pairs = set()
        while len(pairs) < m:
            pairs.add((rng.randrange(1, 256), rng.randrange(1, 256)))
        if not any(b.split_is_zero(0, x, y) for x, y in pairs):
            misses += 1
    assert misses / bundles <= 2.0 ** -P.split_count + 0.03


def test_split_zero_rate_near_one_over_d(small):
    b = bundle_generate(small, 6)
    rng = random.Random(3)
    trials = 20000
    zeros = sum(b.split_is_zero(1, rng.randrange(1, 300), rng.randrange(1, 300)) for _ in range(trials))
    rate = zeros / trials
    assert 0.5 / small.D < rate < 2.0 / small.D


def test_split_cache_matches_direct(small):
    b = bundle_generate(small, 9)
    H = b.split_hash(2)
    for x in range(1, 40):
        for y in range(1, 40):
            assert b.split_is_zero(2, x, y) == H.is_zero(x, y)


def test_compress_pair_in_level_range_and_few_collisions(small):
    b = bundle_generate(small, 10)
    al = b.alphabet
    rng = random.Random(5)
    pairs = {(rng.randrange(1, 1000), rng.randrange(1, 1000)) for _ in range(3000)}
    out = {}
    for x, y in pairs:
        c = b.compress_pair(3, x, y)
        assert c == b.compression_hash(3)(x, y)
        assert al.comp(3, 0) <= c < al.comp(3, 0) + al.n4
        out.setdefault(c, set()).add((x, y))
    collisions = sum(len(v) - 1 for v in out.values())
    assert collisions <= 1


def test_derived_seeds_and_copies(small):
    assert derived_seed(7, 1) == derived_seed(7, 1)
    assert derived_seed(7, 1) != derived_seed(7, 2)
    copies = copy_bundles(bundle_generate(small, 7), 3)
    assert copies[0].seed == 7
    assert len({c.digest for c in copies}) == 3
    with pytest.raises(ValueError):
        copy_bundles(copies[0], 0)

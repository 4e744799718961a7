import random

import numpy as np
import pytest
from hypothesis import given, strategies as st

from lcsketch import bundle_generate, derive_params
from lcsketch.hamming_sketch import (
    INFINITE,
    IncomparableSketches,
    Mismatch,
    block_compare,
    block_read,
    block_sketch_new,
    block_write,
    ham_append,
    ham_compare,
    ham_new,
    ham_of_known,
    ham_read,
    ham_remove_front,
    ham_shift,
    ham_write,
)
from lcsketch.hashing import IntReader, IntWriter

P = derive_params(1024, 6)
BUNDLE = bundle_generate(P, 21)
K = 8


def sketch(x, offset=0, kcap=K, bundle=BUNDLE):
    return ham_of_known(x, offset, P, kcap, bundle)


def test_append_then_remove_everything_gives_zeros():
    rng = random.Random(1)
    x = [rng.randrange(1, 10**6) for _ in range(50)]
    sk = ham_new(P, K, BUNDLE)
    for v in x:
        ham_append(sk, v)
    for v in x:
        ham_remove_front(sk, v)
    assert sk.length == 0 and sk.offset == 50
    assert not any(sk.payload())
    with pytest.raises(IndexError):
        ham_remove_front(sk, 1)


def test_incremental_matches_known():
    rng = random.Random(2)
    x = [rng.randrange(1, 1000) for _ in range(200)]
    sk = ham_new(P, K, BUNDLE)
    for v in [7, 8, 9] + x:
        ham_append(sk, v)
    for v in [7, 8, 9]:
        ham_remove_front(sk, v)
    assert sk.payload() == sketch(x, offset=3).payload()


def test_shift_reindexes():
    x = list(range(1, 60))
    assert ham_shift(sketch(x), 17).payload() == sketch(x, offset=17).payload()


def test_all_ones_closed_form():
    p, w = P.p, BUNDLE.ham_omega
    sk = sketch([1] * 5)
    for j in range(1, 2 * K + 1):
        z = pow(w, j, p)
        assert sk.A[j - 1] == (pow(z, 5, p) - 1) * pow(z - 1, -1, p) % p


def test_equal_strings_compare_empty():
    x = list(range(1, 100))
    assert ham_compare(sketch(x), sketch(x)) == []


def test_single_substitution():
    x = list(range(1, 100))
    y = list(x)
    y[42] = 5000
    assert ham_compare(sketch(x), sketch(y)) == [Mismatch(42, 43, 5000)]


@given(st.integers(0, K), st.integers(0, 10**6))
def test_recovers_up_to_capacity(count, seed):
    rng = random.Random(seed)
    n = 300
    x = [rng.randrange(1, 2**40) for _ in range(n)]
    y = list(x)
    where = sorted(rng.sample(range(n), count))
    for i in where:
        y[i] = x[i] + rng.randrange(1, 1000)
    got = ham_compare(sketch(x, offset=11), sketch(y, offset=11))
    assert got == [Mismatch(i, x[i], y[i]) for i in where]


def test_over_capacity_is_infinite():
    rng = random.Random(4)
    for _ in range(20):
        x = [rng.randrange(1, 1000) for _ in range(300)]
        y = list(x)
        for i in rng.sample(range(300), K + 1 + rng.randrange(5)):
            y[i] += 1
        assert ham_compare(sketch(x), sketch(y)) is INFINITE


def test_different_ranges_are_infinite():
    x = list(range(1, 20))
    assert ham_compare(sketch(x), sketch(x, offset=1)) is INFINITE


def test_incomparable_sketches_raise():
    other = bundle_generate(P, 22)
    with pytest.raises(IncomparableSketches):
        ham_compare(sketch([1, 2]), sketch([1, 2], bundle=other))
    with pytest.raises(IncomparableSketches):
        ham_compare(sketch([1, 2]), sketch([1, 2], kcap=K + 1))


def test_length_limit():
    sk = ham_new(P, K, BUNDLE, max_length=2)
    ham_append(sk, 1)
    ham_append(sk, 1)
    with pytest.raises(OverflowError):
        ham_append(sk, 1)


def test_serialization_round_trip():
    sk = sketch([3, 1, 4, 1, 5], offset=9)
    w = IntWriter()
    ham_write(sk, w)
    assert ham_read(IntReader(w.getvalue())) == sk


# -- block sketches ---------------------------------------------------------


def blocks(rng, count, ncols):
    return [(np.asarray([rng.randrange(2, 10**9) for _ in range(ncols)], dtype=np.int64), rng.randrange(2, 10**9))
            for _ in range(count)]


def block_sketch(bs, ncols_total=64):
    sk = block_sketch_new(P, K, BUNDLE, ncols_total)
    for cols, tail in bs:
        sk.append_block(cols, tail)
    return sk


def test_block_compare_returns_contents():
    rng = random.Random(5)
    xs = blocks(rng, 40, 12)
    ys = list(xs)
    changed = [3, 20, 39]
    for i in changed:
        ys[i] = blocks(rng, 1, 12)[0]
    got = block_compare(block_sketch(xs), block_sketch(ys))
    assert [m.index for m in got] == changed
    for m in got:
        assert list(m.x_cols) == list(xs[m.index][0]) and m.x_tail == xs[m.index][1]
        assert list(m.y_cols) == list(ys[m.index][0]) and m.y_tail == ys[m.index][1]


def test_block_compare_handles_different_widths():
    rng = random.Random(6)
    xs = blocks(rng, 10, 5)
    ys = list(xs)
    ys[4] = blocks(rng, 1, 9)[0]
    (m,) = block_compare(block_sketch(xs), block_sketch(ys))
    assert m.index == 4
    assert list(m.y_cols) == list(ys[4][0])
    # the shorter block is reported padded with its tail value
    assert list(m.x_cols) == list(xs[4][0]) + [xs[4][1]] * 4


def test_block_over_capacity_and_max_blocks():
    rng = random.Random(7)
    xs = blocks(rng, 30, 4)
    ys = blocks(rng, 30, 4)
    assert block_compare(block_sketch(xs), block_sketch(ys)) is INFINITE
    zs = list(xs)
    zs[0], zs[1] = ys[0], ys[1]
    assert block_compare(block_sketch(xs), block_sketch(zs), max_blocks=1) is INFINITE


def test_constant_blocks_equal_appended_ones():
    a = block_sketch([(np.ones(3, dtype=np.int64), 1)] * 6)
    b = block_sketch_new(P, K, BUNDLE, 64)
    b.add_constant_blocks(1, 0, 6)
    b.length = 6
    assert block_compare(a, b) == []


def test_remove_front_and_shift():
    rng = random.Random(8)
    xs = blocks(rng, 12, 6)
    a = block_sketch(xs)
    for cols, tail in xs[:5]:
        a.remove_front_block(cols, tail)
    b = block_sketch(xs[5:]).shifted(5)
    assert a.offset == b.offset == 5
    assert block_compare(a, b) == []


def test_block_serialization_round_trip():
    rng = random.Random(9)
    sk = block_sketch(blocks(rng, 5, 7))
    w = IntWriter()
    block_write(sk, w)
    back = block_read(IntReader(w.getvalue()))
    assert (back.offset, back.length, back.ncols) == (sk.offset, sk.length, sk.ncols)
    assert block_compare(back, sk) == []

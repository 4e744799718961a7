"""Rolling edit-distance sketch: append on the right, remove on the left.

Each side of the sketch (insertion and deletion) keeps the decomposition of
everything fed to it so far, but only holds the last ``4T`` committed
grammars and up to ``T`` active grammars in memory.  Appending a symbol
re-runs the incremental update on the active tail; grammars pushed out of
the active list are committed.  Committing grammar ``j + 2T`` folds the
context-keyed encoding of grammar ``j`` into a block Hamming sketch (added
for insertions, subtracted for deletions), so the sketch holds exactly the
grammars of the live window plus a margin of ``2T`` on the left.

Grammar ``G_j`` (1-based, in the order of the decomposition) is stored at
absolute block position ``j - 1``.  Insertions and deletions of the same
grammar therefore cancel regardless of their order.

Comparison recovers the grammars that differ between two sketches and
sums edit distances of the corresponding pieces; see :func:`rolling_compare`.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Sequence

from .active_update import update_active_grammars
from .core import Params
from .decomposition import DecompositionError
from .ed_sketch import majority
from .encoding import (
    BinEncoding,
    EncodedGrammar,
    bin_encode,
    context_fingerprint_polys,
    decode_columns,
    pack_width,
    packed_length,
)
from .grammar_ops import INF, Grammar, GrammarError, dump_grammar, eval_grammar, eval_size, parse_grammar
from .hamming_sketch import (
    BlockHamSketch,
    IncomparableSketches,
    block_compare,
    block_read,
    block_sketch_new,
    block_write,
)
from .hashing import RandomnessBundle, read_header, write_header
from .oracle_testkit import banded_edit_distance

MAGIC = b"LCSR"


@dataclass
class _Committed:
    grammar: Grammar
    bin: BinEncoding
    poly: int  # kr_poly of bin, cached for context fingerprints
    size: int  # eval size


@dataclass
class Side:
    """One buffer: committed ring plus active list.

    ``count`` is the number of grammars committed so far (``s`` on the
    insertion side, ``r`` on the deletion side); ``symbols`` is how many
    input symbols were fed; ``committed_len`` is the eval size of all
    committed grammars.
    """

    ring: deque = field(default_factory=deque)
    active: list[Grammar] = field(default_factory=list)
    count: int = 0
    symbols: int = 0
    committed_len: int = 0

    @property
    def active_len(self) -> int:
        return self.symbols - self.committed_len

    def committed(self, j: int) -> Grammar | None:
        """G_j if it is still in the ring."""
        i = j - (self.count - len(self.ring)) - 1
        if 0 <= i < len(self.ring):
            return self.ring[i].grammar
        return None

    def grammar(self, j: int) -> Grammar | None:
        """G_j from the ring or the active list, None if not held."""
        if j > self.count:
            i = j - self.count - 1
            return self.active[i] if i < len(self.active) else None
        return self.committed(j)


@dataclass
class RollingSketch:
    params: Params
    bundle: RandomnessBundle
    ins: Side
    dels: Side
    ham: BlockHamSketch
    group: int
    failure: str | None = None
    commits: int = 0  # commit events on both sides, for the immutability check
    window: deque | None = None  # live symbols, only kept in debug mode

    @property
    def T(self) -> int:
        return self.params.T

    @property
    def length(self) -> int:
        return self.ins.symbols - self.dels.symbols

    @property
    def spread(self) -> int:
        """d = s + t - r: grammars from the deletion boundary to the right end."""
        return self.ins.count + len(self.ins.active) - self.dels.count

    def ham_range(self) -> tuple[int, int]:
        """Absolute block positions [lo, hi) currently folded into the sketch."""
        T2 = 2 * self.T
        return max(self.dels.count, T2) - T2, max(self.ins.count, T2) - T2

    def to_bytes(self) -> bytes:
        w = write_header(MAGIC, self.bundle)
        w.ints([self.group, self.commits])
        w.raw((self.failure or "").encode())
        for side in (self.ins, self.dels):
            w.ints([side.count, side.symbols, side.committed_len, len(side.ring), len(side.active)])
            for c in side.ring:
                w.raw(dump_grammar(c.grammar).encode())
            for g in side.active:
                w.raw(dump_grammar(g).encode())
        block_write(self.ham, w)
        return w.getvalue()

    @classmethod
    def from_bytes(cls, data: bytes, bundle: RandomnessBundle) -> "RollingSketch":
        digest, _echo, r = read_header(data, MAGIC)
        if digest != bundle.digest:
            raise IncomparableSketches("sketch was built with a different bundle")
        P = bundle.params
        group, commits = r.ints(2)
        failure = r.raw().decode() or None
        sides = []
        for _ in range(2):
            count, symbols, committed_len, nring, nactive = r.ints(5)
            side = Side(count=count, symbols=symbols, committed_len=committed_len)
            for _ in range(nring):
                side.ring.append(_committed_entry(parse_grammar(r.raw().decode(), bundle.alphabet), P, bundle))
            side.active = [parse_grammar(r.raw().decode(), bundle.alphabet) for _ in range(nactive)]
            sides.append(side)
        ham = block_read(r)
        return cls(P, bundle, sides[0], sides[1], ham, group, failure, commits)


def _committed_entry(G: Grammar, P: Params, bundle: RandomnessBundle) -> _Committed:
    b = bin_encode(G, P)
    return _Committed(G, b, b.kr_poly(bundle.kr), eval_size(G))


def rolling_new(params: Params, bundle: RandomnessBundle, debug: bool = False) -> RollingSketch:
    if params != bundle.params:
        raise ValueError("params do not match the bundle")
    g = pack_width(params)
    ham = block_sketch_new(params, params.rolling_block_capacity, bundle, packed_length(params, g))
    return RollingSketch(params, bundle, Side(), Side(), ham, g, window=deque() if debug else None)


def _commit(sk: RollingSketch, side: Side, G: Grammar, sign: int) -> None:
    """Commit G as grammar count+1; fold grammar count+1-2T into the sketch."""
    P = sk.params
    T = P.T
    entry = _committed_entry(G, P, sk.bundle)
    j = side.count + 1 - 2 * T
    if j > 0:
        # context window G_{count-4T+1} .. G_{count+1}; missing grammars are empty slots
        missing = 4 * T - len(side.ring)
        polys = [None] * missing + [c.poly for c in side.ring] + [entry.poly]
        target = side.ring[2 * T - missing]
        if target.bin.oversize:
            h = 1
        else:
            h = context_fingerprint_polys(polys, sk.bundle.kr, P.M)
        e = EncodedGrammar(target.bin, h, P.N)
        sk.ham.add_block_at(e.packed_values(sk.group), e.tail_value, j - 1, sign)
    side.ring.append(entry)
    if len(side.ring) > 4 * T:
        side.ring.popleft()
    side.count += 1
    side.committed_len += entry.size
    sk.commits += 1


def _feed(sk: RollingSketch, side: Side, a: int, sign: int) -> None:
    P = sk.params
    T = P.T
    side.symbols += 1
    if sk.failure:
        return
    t = len(side.active)
    c = min(side.count, T + 1 - t)
    context = [side.ring[len(side.ring) - c + i].grammar for i in range(c)]
    try:
        out = update_active_grammars(context + side.active, a, sk.bundle)
    except (DecompositionError, GrammarError) as exc:
        sk.failure = f"{type(exc).__name__}: {exc}"
        return
    if out[:c] != context:
        sk.failure = "update changed a committed grammar"
        return
    if any(G.size > P.S for G in out[c:]):
        sk.failure = f"SizeOverflow: grammar larger than S={P.S}"
        return
    active = out[c:]
    extra = len(active) - T
    for G in active[:max(extra, 0)]:
        _commit(sk, side, G, sign)
    side.active = active[max(extra, 0):]


def rolling_append(sk: RollingSketch, a: int) -> None:
    if not 0 <= a < sk.params.sigma_size:
        raise ValueError(f"input symbol {a} outside the alphabet")
    if sk.ins.symbols >= sk.params.n:
        raise ValueError(f"more than n={sk.params.n} symbols inserted")
    _feed(sk, sk.ins, a, +1)
    if sk.window is not None:
        sk.window.append(a)


def rolling_remove(sk: RollingSketch, a: int) -> None:
    """Remove ``a`` from the front; ``a`` must be the current first symbol."""
    if sk.length <= 0:
        raise ValueError("remove from an empty window")
    if not 0 <= a < sk.params.sigma_size:
        raise ValueError(f"input symbol {a} outside the alphabet")
    if sk.window is not None:
        if sk.window[0] != a:
            raise ValueError(f"removed symbol {a} is not the front symbol {sk.window[0]}")
        sk.window.popleft()
    _feed(sk, sk.dels, a, -1)


# ---------------------------------------------------------------------------
# comparison


class _Unrecoverable(Exception):
    """The sketches do not carry enough information; the answer is INF."""


def _decode(cols, tail, sk: RollingSketch) -> Grammar | None:
    """Recovered block as a grammar; None for an all-ones padding block."""
    if tail == 1 and all(int(v) == 1 for v in cols):
        return None
    G = decode_columns(cols, tail, sk.params, None, sk.bundle.alphabet, check_h=False, group=sk.group)
    if not G:
        raise _Unrecoverable(G.reason)
    return G


def _ones_padded(sk: RollingSketch, shift: int, lo: int, hi: int) -> BlockHamSketch:
    """The sketch moved by ``shift`` positions, padded with all-ones blocks to cover [lo, hi)."""
    own_lo, own_hi = sk.ham_range()
    own_lo, own_hi = own_lo + shift, own_hi + shift
    out = sk.ham.shifted(shift)
    out.add_constant_blocks(1, lo, own_lo - lo)
    out.add_constant_blocks(1, own_hi, hi - own_hi)
    out.offset, out.length = lo, hi - lo
    return out


def _recover_all(sk: RollingSketch) -> list[Grammar]:
    """G_{r+1} .. G_{s+t} of one sketch, recovering old grammars against an all-ones dummy."""
    ins, dels = sk.ins, sk.dels
    first_ring = ins.count - len(ins.ring) + 1
    found: dict[int, Grammar] = {}
    if dels.count + 1 < first_ring:
        lo, hi = sk.ham_range()
        mine = sk.ham.copy()
        mine.offset, mine.length = lo, hi - lo
        dummy = block_sketch_new(sk.params, sk.ham.kcap, sk.bundle, sk.ham.ncols_total)
        dummy.add_constant_blocks(1, lo, hi - lo)
        dummy.offset, dummy.length = lo, hi - lo
        mism = block_compare(mine, dummy)
        if not mism or len(mism) != hi - lo:
            raise _Unrecoverable("could not recover the sketched grammars")
        for m in mism:
            G = _decode(m.x_cols, m.x_tail, sk)
            if G is None:
                raise _Unrecoverable("padding block inside the sketched range")
            found[lo + m.index + 1] = G
    out = []
    for j in range(dels.count + 1, ins.count + len(ins.active) + 1):
        G = ins.grammar(j) if j >= first_ring else found.get(j)
        if G is None:
            raise _Unrecoverable(f"grammar {j} not recovered")
        out.append(G)
    return out


def _window_string(grammars: Sequence[Grammar], skip: int) -> list[int]:
    out: list[int] = []
    for G in grammars:
        size = eval_size(G)
        if skip >= size:
            skip -= size
            continue
        out.extend(eval_grammar(G)[skip:])
        skip = 0
    return out


def _drop_common_tail(gx: list[Grammar], gy: list[Grammar], skip_x: int, skip_y: int) -> None:
    """Pop equal trailing grammar pairs that lie wholly inside both windows."""
    left_x = sum(eval_size(G) for G in gx)
    left_y = sum(eval_size(G) for G in gy)
    while gx and gy and gx[-1] == gy[-1]:
        size = eval_size(gx[-1])
        if left_x - size < skip_x or left_y - size < skip_y:
            break
        left_x -= size
        left_y -= size
        gx.pop()
        gy.pop()


def _compare_recovered(x: RollingSketch, y: RollingSketch, k: int) -> float:
    gx, gy = _recover_all(x), _recover_all(y)
    skip_x, skip_y = x.dels.active_len, y.dels.active_len
    _drop_common_tail(gx, gy, skip_x, skip_y)
    return banded_edit_distance(_window_string(gx, skip_x), _window_string(gy, skip_y), k)


def _compare_aligned(x: RollingSketch, y: RollingSketch, k: int) -> float:
    """Both windows span many grammars: align the sketches from the right and walk the pairs.

    All indices below are x's grammar indices; y's grammar j' sits at
    j' + shift, so the last grammars of the two sketches line up.
    """
    shift = (x.ins.count + len(x.ins.active)) - (y.ins.count + len(y.ins.active))
    xlo, xhi = x.ham_range()
    ylo, yhi = y.ham_range()
    lo, hi = min(xlo, ylo + shift), max(xhi, yhi + shift)
    hx = _ones_padded(x, 0, lo, hi)
    hy = _ones_padded(y, shift, lo, hi)
    mism = block_compare(hx, hy)
    if not mism and mism != []:
        raise _Unrecoverable("too many differing grammars")
    differ: set[int] = set()
    kx: dict[int, Grammar | None] = {}
    ky: dict[int, Grammar | None] = {}
    for m in mism:
        j = lo + m.index + 1
        differ.add(j)
        kx[j] = _decode(m.x_cols, m.x_tail, x)
        ky[j] = _decode(m.y_cols, m.y_tail, y)

    first = x.dels.count + 1
    last = x.ins.count + len(x.ins.active)
    # positions covered by both sketches; a match there also matches the context
    both_lo, both_hi = max(xlo, ylo + shift), min(xhi, yhi + shift)
    pairs: list[tuple[Grammar | None, Grammar | None, bool]] = []
    for j in range(first, last + 1):
        a = x.ins.grammar(j)
        jy = j - shift
        if jy < 1:
            b = _EMPTY  # y has no grammar at this position
        else:
            b = y.ins.grammar(jy)
            if b is None and jy <= y.dels.count:
                b = y.dels.committed(jy)
        if j in differ:
            if a is None:
                a = kx[j]
            if b is None:
                b = ky[j]
            if a is None or b is None:
                raise _Unrecoverable(f"differing grammar {j} not recovered")
        elif b is _EMPTY:
            if a is None:
                raise _Unrecoverable(f"grammar {j} has no counterpart")
        else:
            # not reported as differing: the encodings agree, so the grammars agree
            a = a if a is not None else b
            b = b if b is not None else a
        anchor = j not in differ and both_lo <= j - 1 < both_hi
        pairs.append((a, b, anchor))

    # y's grammars before its deletion boundary are skipped like the deleted prefix
    skip_y = y.dels.active_len
    for j in range(first, min(last, y.dels.count + shift) + 1):
        a, b, _ = pairs[j - first]
        if b is None:
            raise _Unrecoverable("deleted grammar of y not held")
        if b is not _EMPTY:
            skip_y += eval_size(b)
    return _walk(pairs, x.dels.active_len, skip_y, k)


_EMPTY = Grammar((), {}, None)  # type: ignore[arg-type]


def _size(G: Grammar) -> int:
    return 0 if G is _EMPTY else eval_size(G)


def _eval(G: Grammar) -> tuple[int, ...]:
    return () if G is _EMPTY else eval_grammar(G)


def _walk(pairs, skip_x: int, skip_y: int, k: int) -> float:
    """Sum edit distances over aligned grammar pairs.

    ``None`` on both sides of a pair means the same (unrecovered) grammar.
    An anchor is a pair the sketch reports equal together with its context;
    anchors separate independent pieces once both windows have started, and
    before that the two starts must fall into the same anchor.  Held pairs
    that merely happen to be equal are not anchors: next to an edit that
    changes the grammar count the pairing is off by one, and cutting there
    would break the alignment.
    """
    total = 0
    px: list[int] = []
    py: list[int] = []
    started_x = started_y = False

    def flush() -> None:
        nonlocal total, px, py
        if px or py:
            d = banded_edit_distance(px, py, k - total)
            if d == INF:
                raise _Unrecoverable("edit distance above k")
            total += int(d)
        px, py = [], []

    for a, b, anchor in pairs:
        if anchor and started_x and started_y:
            flush()
            continue
        if a is None:
            if not anchor or started_x or started_y:
                raise _Unrecoverable("window start inside an unrecovered grammar")
            # both starts fall in this common grammar: one window is a suffix of the other
            total += abs(skip_x - skip_y)
            started_x = started_y = True
            continue
        for G, is_x in ((a, True), (b, False)):
            size = _size(G)
            if is_x:
                if started_x:
                    px.extend(_eval(G))
                elif skip_x < size:
                    px.extend(_eval(G)[skip_x:])
                    started_x = True
                else:
                    skip_x -= size
            else:
                if started_y:
                    py.extend(_eval(G))
                elif skip_y < size:
                    py.extend(_eval(G)[skip_y:])
                    started_y = True
                else:
                    skip_y -= size
        if total > k:
            raise _Unrecoverable("edit distance above k")
    if not (started_x and started_y):
        raise _Unrecoverable("window start not located")
    flush()
    return total if total <= k else INF


def rolling_compare(skx: RollingSketch, sky: RollingSketch) -> float:
    """ED of the two live windows if at most k, else INF (also INF when recovery fails)."""
    if skx.bundle.digest != sky.bundle.digest or skx.params != sky.params:
        raise IncomparableSketches("sketches were built with different bundles")
    if skx.failure or sky.failure:
        return INF
    k = skx.params.k
    T = skx.T
    nx, ny = skx.length, sky.length
    if abs(nx - ny) > k:
        return INF
    if nx == 0 or ny == 0:
        return max(nx, ny)
    if skx.spread < sky.spread:
        skx, sky = sky, skx
    if skx.spread - sky.spread >= 2 * T:
        return INF
    try:
        if skx.spread < 10 * T:
            d = _compare_recovered(skx, sky, k)
        else:
            d = _compare_aligned(skx, sky, k)
    except (_Unrecoverable, GrammarError):
        return INF
    return d if d <= k else INF


# ---------------------------------------------------------------------------
# independent copies


@dataclass
class AmplifiedRolling:
    """Independent rolling sketches (one per bundle) updated together; compare is a majority vote."""

    copies: list[RollingSketch]

    @classmethod
    def new(cls, bundles: Sequence[RandomnessBundle], debug: bool = False) -> "AmplifiedRolling":
        return cls([rolling_new(b.params, b, debug) for b in bundles])

    def append(self, a: int) -> None:
        for sk in self.copies:
            rolling_append(sk, a)

    def remove(self, a: int) -> None:
        for sk in self.copies:
            rolling_remove(sk, a)

    def compare(self, other: "AmplifiedRolling") -> float:
        if len(self.copies) != len(other.copies):
            raise ValueError("copy counts differ")
        return majority([rolling_compare(a, b) for a, b in zip(self.copies, other.copies)])

    def snapshot(self) -> "AmplifiedRolling":
        return AmplifiedRolling([_snapshot(sk) for sk in self.copies])


def _snapshot(sk: RollingSketch) -> RollingSketch:
    return RollingSketch(
        sk.params, sk.bundle,
        Side(deque(sk.ins.ring), list(sk.ins.active), sk.ins.count, sk.ins.symbols, sk.ins.committed_len),
        Side(deque(sk.dels.ring), list(sk.dels.active), sk.dels.count, sk.dels.symbols, sk.dels.committed_len),
        sk.ham.copy(), sk.group, sk.failure, sk.commits,
        None if sk.window is None else deque(sk.window),
    )

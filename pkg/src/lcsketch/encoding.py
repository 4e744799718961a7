"""Fixed-length encodings of grammars.

``Bin(G)`` lists the rules of G as records of three W-bit fields, sorted by
field values, then zero padding up to M bits.  Record layouts::

    pair rule     c -> a b      (ord c, ord a, ord b)
    repeat rule   r_{a,k}       (ord r, ord a, k)
    start rule    # -> v        (ALL1, ord v1, ord v2 | ALL1)

ALL1 is the all-ones W-bit pattern, larger than every ord, so the start
record always sorts last.  ``Enc(G)`` turns bit 0 into ``h`` and bit 1 into
``N + h`` where ``h`` is a Karp-Rabin fingerprint of ``Bin(G)`` (or of a window
of neighbouring encodings).  M is about 10^9 at realistic parameters, so an
encoding is stored as its record body plus implicit zero padding.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import Params
from .grammar_ops import Grammar
from .hashing import Bits, KrFingerprint


@dataclass(frozen=True)
class Undecodable:
    reason: str

    def __bool__(self) -> bool:
        return False


@dataclass(frozen=True)
class BinEncoding:
    """Bin(G): ``body`` followed by zeros up to M bits; ``oversize`` means 1^M."""

    body: Bits
    M: int
    oversize: bool = False

    def bit(self, i: int) -> int:
        if not 0 <= i < self.M:
            raise IndexError(i)
        if self.oversize:
            return 1
        return self.body.bit(i) if i < self.body.nbits else 0

    def to_bits(self) -> Bits:
        """Materialize all M bits (only sensible for small M)."""
        if self.oversize:
            return Bits.from_int((1 << self.M) - 1, self.M)
        return Bits.from_int(self.body.as_int() << (self.M - self.body.nbits), self.M)

    def kr_poly(self, key: KrFingerprint) -> int:
        if self.oversize:
            return geometric_sum(key.z, 0, self.M, key.q)
        return key.poly(self.body)


def geometric_sum(z: int, start: int, stop: int, q: int) -> int:
    """sum_{i=start}^{stop-1} z^i mod q."""
    count = stop - start
    if count <= 0:
        return 0
    if z % q == 1:
        return count % q
    num = (pow(z, count, q) - 1) % q
    return pow(z, start, q) * num % q * pow(z - 1, -1, q) % q


def all_ones(P: Params) -> int:
    return (1 << P.W) - 1


def grammar_records(G: Grammar, P: Params) -> list[tuple[int, int, int]] | None:
    """Sorted record tuples, or None when G cannot be encoded."""
    al = G.alphabet
    if len(G.start) > 2:
        return None
    ones = all_ones(P)
    recs = [(c, a, b) for c, (a, b) in G.rules.items()]
    for r in G.repeat_symbols():
        base, count = al.repeat_parts(r)
        recs.append((r, base, count))
    start = list(G.start) + [ones] * (2 - len(G.start))
    recs.append((ones, start[0], start[1]))
    if len(recs) > P.S:
        return None
    recs.sort()
    return recs


def bin_encode(G: Grammar, P: Params) -> BinEncoding:
    recs = grammar_records(G, P)
    if recs is None:
        return BinEncoding(Bits(b"", 0), P.M, oversize=True)
    W = P.W
    value = 0
    for rec in recs:
        for f in rec:
            value = (value << W) | f
    return BinEncoding(Bits.from_int(value, 3 * W * len(recs)), P.M)


@dataclass(frozen=True)
class EncodedGrammar:
    """Enc(G): M symbols over {1..2N}, symbol i = h + N*bit_i; oversize is 1^M."""

    bin: BinEncoding
    h: int
    N: int

    @property
    def M(self) -> int:
        return self.bin.M

    @property
    def oversize(self) -> bool:
        return self.bin.oversize

    def __len__(self) -> int:
        return self.bin.M

    def symbol(self, i: int) -> int:
        if self.oversize:
            if not 0 <= i < self.M:
                raise IndexError(i)
            return 1
        return self.h + self.N * self.bin.bit(i)

    @property
    def tail_value(self) -> int:
        """Value of every symbol after the record body."""
        return 1 if self.oversize else self.h

    def body_values(self, ncols: int | None = None) -> np.ndarray:
        """Symbols 0..ncols-1 as int64 (ncols defaults to the body length)."""
        nb = 0 if self.oversize else self.bin.body.nbits
        if ncols is None:
            ncols = nb
        out = np.full(ncols, self.tail_value, dtype=np.int64)
        if nb:
            bits = np.unpackbits(np.frombuffer(self.bin.body.data, dtype=np.uint8))[:nb]
            take = min(nb, ncols)
            out[:take] += self.N * bits[:take].astype(np.int64)
        return out

    def packed_values(self, group: int, ncols: int | None = None) -> np.ndarray:
        """Columns of ``group`` symbols each, as ``h + N*b`` (see decode_columns)."""
        nb = 0 if self.oversize else self.bin.body.nbits
        if ncols is None:
            ncols = -(-nb // group)
        if self.oversize:
            return np.ones(ncols, dtype=np.int64)
        out = np.full(ncols, self.h, dtype=np.int64)
        if nb and ncols:
            bits = np.unpackbits(np.frombuffer(self.bin.body.data, dtype=np.uint8))[:nb]
            take = min(-(-nb // group), ncols)
            padded = np.zeros(take * group, dtype=np.int64)
            m = min(nb, take * group)
            padded[:m] = bits[:m]
            weights = np.int64(1) << np.arange(group - 1, -1, -1, dtype=np.int64)
            out[:take] += self.N * (padded.reshape(take, group) @ weights)
        return out

    def to_list(self) -> list[int]:
        return [self.symbol(i) for i in range(self.M)]

    def hamming(self, other: "EncodedGrammar") -> int:
        """Number of positions where the two encodings differ."""
        if self.M != other.M:
            raise ValueError("encodings of different lengths")
        if self.oversize or other.oversize:
            if self.oversize and other.oversize:
                return 0
            e = other if self.oversize else self
            if e.h != 1:
                return self.M
            return sum(e.bin.body.bit(i) for i in range(e.bin.body.nbits))
        if self.h != other.h:
            return self.M
        a, b = self.bin.body, other.bin.body
        width = max(a.nbits, b.nbits)
        va = a.as_int() << (width - a.nbits)
        vb = b.as_int() << (width - b.nbits)
        return bin(va ^ vb).count("1")


def enc(G: Grammar, P: Params, key: KrFingerprint) -> EncodedGrammar:
    b = bin_encode(G, P)
    if b.oversize:
        return EncodedGrammar(b, 1, P.N)
    return EncodedGrammar(b, key(b.body), P.N)


def context_fingerprint(bins: Sequence[BinEncoding | None], key: KrFingerprint, M: int) -> int:
    """F_KR of the concatenation of M-bit encodings; ``None`` stands for an all-zero slot."""
    return context_fingerprint_polys([None if b is None else b.kr_poly(key) for b in bins], key, M)


def context_fingerprint_polys(polys: Sequence[int | None], key: KrFingerprint, M: int) -> int:
    """As :func:`context_fingerprint`, from precomputed ``kr_poly`` values."""
    q = key.q
    zM = pow(key.z, M, q)
    acc = 0
    shift = 1
    for v in polys:
        if v is not None:
            acc = (acc + shift * v) % q
        shift = shift * zM % q
    return key.finish(acc)


def enc_with_context(
    G: Grammar,
    context: Sequence[Grammar | None],
    P: Params,
    key: KrFingerprint,
    bins: Sequence[BinEncoding | None] | None = None,
) -> EncodedGrammar:
    """Enc(G) keyed by the fingerprint of the whole context window (which includes G)."""
    b = bin_encode(G, P)
    if b.oversize:
        return EncodedGrammar(b, 1, P.N)
    if bins is None:
        bins = [None if g is None else bin_encode(g, P) for g in context]
    return EncodedGrammar(b, context_fingerprint(bins, key, P.M), P.N)


def pack_width(P: Params) -> int:
    """Largest g with N * 2^g < p: that many Enc symbols fit in one field element."""
    g = 0
    # columns are also handled as int64, so h + N*b must stay below 2^63
    while P.N << (g + 1) < min(P.p, 1 << 62):
        g += 1
    return max(g, 1)


def packed_length(P: Params, g: int) -> int:
    return -(-P.M // g)


def _join_columns(chunks: list[int], group: int) -> int:
    """Concatenate ``group``-bit chunks, first chunk most significant."""
    if not chunks:
        return 0
    arr = np.asarray(chunks, dtype=np.uint64)
    shifts = np.arange(group - 1, -1, -1, dtype=np.uint64)
    bits = ((arr[:, None] >> shifts) & np.uint64(1)).astype(np.uint8).ravel()
    pad = (-bits.size) % 8
    packed = np.packbits(np.concatenate([np.zeros(pad, np.uint8), bits]))
    return int.from_bytes(packed.tobytes(), "big")


def decode_columns(
    values: Sequence[int] | np.ndarray,
    tail_value: int,
    P: Params,
    key: KrFingerprint | None,
    alphabet,
    check_h: bool = True,
    group: int = 1,
) -> Grammar | Undecodable:
    """Rebuild a grammar from its first ``len(values)`` columns and the common tail value.

    Each column packs ``group`` consecutive Enc symbols as ``h + N*b`` where
    ``b`` holds their bits, first symbol most significant; ``group=1`` is
    plain Enc.  With ``check_h`` the fingerprint is recomputed from the
    recovered bits; the rolling sketch keys encodings by a context window and
    turns it off.
    """
    N, W = P.N, P.W
    ncols_total = packed_length(P, group)
    top = N << group
    if len(values) > ncols_total:
        return Undecodable("more columns than the encoding length")
    vals = np.asarray(values, dtype=object if top >= 1 << 63 else np.int64)
    if (vals < 1).any() or (vals > top).any() or not 1 <= tail_value <= top:
        return Undecodable("symbol outside the encoding alphabet")
    if (vals == 1).all() and tail_value == 1:
        return Undecodable("oversize sentinel 1^M")
    h = (tail_value - 1) % N + 1
    if ((vals - 1) % N + 1 != h).any():
        return Undecodable("inconsistent fingerprint across symbols")
    if (tail_value - 1) // N and len(vals) < ncols_total:
        return Undecodable("padding is not zero")
    value = _join_columns([int(v) for v in (vals - 1) // N], group)
    nbits = len(vals) * group
    if nbits > P.M and value & ((1 << (nbits - P.M)) - 1):
        return Undecodable("bits beyond M")
    if value == 0:
        return Undecodable("empty record body")
    body_bits = nbits
    while not value & 1:
        value >>= 1
        body_bits -= 1
    body = Bits.from_int(value, body_bits)
    if check_h and key is not None and key(body) != h:
        return Undecodable("fingerprint does not match recovered bits")
    rec_bits = 3 * W
    nrec = (body_bits + rec_bits - 1) // rec_bits
    value <<= nrec * rec_bits - body_bits
    recs = []
    for i in range(nrec):
        rec = (value >> ((nrec - 1 - i) * rec_bits)) & ((1 << rec_bits) - 1)
        recs.append((rec >> (2 * W), (rec >> W) & ((1 << W) - 1), rec & ((1 << W) - 1)))
    return grammar_from_records(recs, P, alphabet)


def grammar_from_records(recs: list[tuple[int, int, int]], P: Params, alphabet) -> Grammar | Undecodable:
    ones = all_ones(P)
    al = alphabet
    if not recs or recs[-1][0] != ones:
        return Undecodable("missing start record")
    if any(recs[i] >= recs[i + 1] for i in range(len(recs) - 1)):
        return Undecodable("records not in canonical order")
    rules: dict[int, tuple[int, int]] = {}
    repeats = set()
    for c, a, b in recs[:-1]:
        if c >= al.size or a >= al.size:
            return Undecodable("field outside the alphabet")
        if al.is_comp(c):
            if b >= al.size:
                return Undecodable("field outside the alphabet")
            rules[c] = (a, b)
        elif al.is_repeat(c):
            if al.repeat_parts(c) != (a, b):
                return Undecodable("repeat record disagrees with its symbol")
            repeats.add(c)
        else:
            return Undecodable("rule for an input symbol")
    _, v1, v2 = recs[-1]
    start = tuple(v for v in (v1, v2) if v != ones)
    if v1 == ones and v2 != ones:
        return Undecodable("malformed start record")
    if any(v >= al.size for v in start):
        return Undecodable("start symbol outside the alphabet")
    G = Grammar(start, rules, al)
    if G.repeat_symbols() != repeats:
        return Undecodable("repeat records do not match the rules")
    return G


def decode_enc(symbols: Sequence[int], P: Params, key: KrFingerprint, alphabet) -> Grammar | Undecodable:
    """Inverse of :func:`enc` on a fully materialized symbol sequence of length M."""
    if len(symbols) != P.M:
        return Undecodable(f"expected {P.M} symbols, got {len(symbols)}")
    if not symbols:
        return Undecodable("empty encoding")
    return decode_columns(list(symbols), symbols[-1], P, key, alphabet)

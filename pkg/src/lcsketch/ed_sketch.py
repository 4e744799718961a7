"""Static edit-distance sketch.

The string is decomposed into grammars, every grammar is encoded as a
fixed-length word whose symbols all change when the grammar changes, and
the concatenated words go into a Hamming sketch that can recover up to k
differing words.  Two sketches are compared by recovering the differing
grammars and summing the edit distances of their expansions.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Sequence

from .core import Params
from .decomposition import decompose_safe
from .encoding import decode_columns, enc, pack_width, packed_length
from .grammar_ops import INF, grammar_pair_ed
from .hamming_sketch import (
    BlockHamSketch,
    IncomparableSketches,
    block_compare,
    block_read,
    block_sketch_new,
    block_write,
)
from .hashing import RandomnessBundle, read_header, write_header

MAGIC = b"LCSE"
DEFAULT_WORK_BUDGET = 1 << 22


@dataclass
class EdSketch:
    params: Params
    digest: int
    count: int  # number of grammars s
    group: int  # Enc symbols per sketched column
    ham: BlockHamSketch
    failure: str | None = None

    @property
    def k(self) -> int:
        return self.params.k

    def to_bytes(self, bundle: RandomnessBundle) -> bytes:
        w = write_header(MAGIC, bundle)
        w.ints([self.count, self.group])
        fail = (self.failure or "").encode()
        w.raw(fail)
        block_write(self.ham, w)
        return w.getvalue()

    @classmethod
    def from_bytes(cls, data: bytes, bundle: RandomnessBundle) -> "EdSketch":
        digest, _echo, r = read_header(data, MAGIC)
        if digest != bundle.digest:
            raise IncomparableSketches("sketch was built with a different bundle")
        count, group = r.ints(2)
        fail = r.raw().decode() or None
        ham = block_read(r)
        return cls(bundle.params, digest, count, group, ham, fail)


def ed_sketch(x: Sequence[int], bundle: RandomnessBundle, params: Params | None = None) -> EdSketch:
    P = params or bundle.params
    if P != bundle.params:
        raise ValueError("params do not match the bundle")
    grammars, failure = decompose_safe(x, bundle)
    g = pack_width(P)
    ham = block_sketch_new(P, P.k, bundle, packed_length(P, g))
    for G in grammars:
        e = enc(G, P, bundle.kr)
        ham.append_block(e.packed_values(g), e.tail_value)
    return EdSketch(P, bundle.digest, len(grammars), g, ham, failure)


def ed_compare(
    skx: EdSketch,
    sky: EdSketch,
    bundle: RandomnessBundle,
    work_budget: int = DEFAULT_WORK_BUDGET,
) -> float:
    """ED(x, y) if at most k, else INF (also INF when recovery fails)."""
    if skx.digest != sky.digest or skx.digest != bundle.digest:
        raise IncomparableSketches("sketches were built with different bundles")
    if skx.failure or sky.failure or skx.count != sky.count:
        return INF
    P = skx.params
    mism = block_compare(skx.ham, sky.ham)
    if not mism and mism != []:
        return INF
    total = 0
    for m in mism:
        Gx = decode_columns(m.x_cols, m.x_tail, P, bundle.kr, bundle.alphabet, group=skx.group)
        Gy = decode_columns(m.y_cols, m.y_tail, P, bundle.kr, bundle.alphabet, group=sky.group)
        if not Gx or not Gy:
            return INF
        d = grammar_pair_ed(Gx, Gy, P.k - total, budget=work_budget)
        if d == INF:
            return INF
        total += d
        if total > P.k:
            return INF
    return total


def ed_sketch_amplified(x: Sequence[int], bundles: Sequence[RandomnessBundle]) -> list[EdSketch]:
    return [ed_sketch(x, b) for b in bundles]


def majority(answers: Sequence[float]) -> float:
    """Value returned by a strict majority of copies, else INF."""
    if not answers:
        return INF
    value, count = Counter(answers).most_common(1)[0]
    return value if 2 * count > len(answers) else INF


def ed_compare_majority(
    xs: Sequence[EdSketch], ys: Sequence[EdSketch], bundles: Sequence[RandomnessBundle]
) -> float:
    if not len(xs) == len(ys) == len(bundles):
        raise ValueError("copy counts differ")
    return majority([ed_compare(a, b, bd) for a, b, bd in zip(xs, ys, bundles)])

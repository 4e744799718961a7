"""Incremental re-decomposition after appending one symbol.

``update_active_grammars`` takes the last (up to T+1) grammars of a
decomposition of ``x`` and a symbol ``a`` and returns grammars that replace
them in the decomposition of ``x + a``.  It partially decompresses the
suffix of the compressed string level by level (``Z_L .. Z_0``), appends
``a`` at level 0 and recompresses upward, reusing the original compression
wherever the locally consistent coloring guarantees it is unchanged.

Each ``F`` string runs parallel to its ``Z``: ``F[i]`` is the level at which
``Z[i]`` became the first symbol of its block (``L+1`` when it never does),
so ``F[i] < l`` marks a block start in the level-l string before splitting.

Indices in this module are 1-based where they mirror the pseudocode of the
update procedure (``u``, ``u'``, ``i``, ``j``); Python slices convert at the
point of use.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

from .decomposition import DecompositionError, DepthExceeded, HashCollision, compress_with_grammar, split
from .grammar_ops import Grammar, UndefinedSymbol, prune
from .hashing import RandomnessBundle


class ContextTooShort(DecompositionError):
    """The active grammars do not reach far enough left for the update."""


@dataclass
class LevelTrace:
    """Result of expanding a level-l string one level down."""

    Z: list[int]
    F: list[int]
    u: int  # symbols of the level-l string left compressed
    r: int  # copies taken from a truncated repeat, 0 if none


class RuleTable:
    """Global rule set of one update: base rules plus newly created ones."""

    def __init__(self) -> None:
        self.rules: dict[int, tuple[int, int]] = {}

    def add(self, rules: Mapping[int, tuple[int, int]]) -> None:
        for c, ab in rules.items():
            old = self.rules.get(c)
            if old is None:
                self.rules[c] = ab
            elif old != ab:
                raise HashCollision(f"symbol {c} stands for {old} and {ab}")

    def get(self, c: int) -> tuple[int, int]:
        rule = self.rules.get(c)
        if rule is None:
            raise UndefinedSymbol(f"no rule for symbol {c}")
        return rule


# ---------------------------------------------------------------------------
# auxiliary functions


def _is_level_comp(al, c: int, level: int) -> bool:
    return al.is_comp(c) and al.level(c) == level


def _is_level_repeat(al, c: int, level: int) -> bool:
    return al.is_repeat(c) and al.level(c) == level


def decompress_symbol(c: int, G: RuleTable, level: int, t: float, bundle: RandomnessBundle) -> list[int]:
    """One level of expansion of c, at most t symbols for repeats."""
    al = bundle.alphabet
    if _is_level_comp(al, c, level):
        return list(G.get(c))
    if _is_level_repeat(al, c, level):
        base, count = al.repeat_parts(c)
        return [base] * int(min(t, count))
    return [c]


def decompress_symbol_length(c: int, level: int, bundle: RandomnessBundle) -> int:
    al = bundle.alphabet
    if _is_level_comp(al, c, level):
        return 2
    if _is_level_repeat(al, c, level):
        return al.repeat_parts(c)[1]
    return 1


def decompress_string(Z: Sequence[int], G: RuleTable, level: int, bundle: RandomnessBundle) -> list[int]:
    out: list[int] = []
    for c in Z:
        out.extend(decompress_symbol(c, G, level, float("inf"), bundle))
    return out


def find_compressed_prefix(Z: Sequence[int], p: int, level: int, bundle: RandomnessBundle) -> int:
    """Smallest j such that the level decompression of Z[1..j] has at least p symbols."""
    q = 0
    j = 0
    while q < p:
        if j >= len(Z):
            raise ContextTooShort(f"string decompresses to fewer than {p} symbols")
        q += decompress_symbol_length(Z[j], level, bundle)
        j += 1
    return j


def splitting_depth(
    G: Grammar | Sequence[int],
    rules: RuleTable,
    bundle: RandomnessBundle,
    following: Grammar | Sequence[int] | None = None,
    following_depth: int | None = None,
) -> int:
    """Lowest level whose split hash is zero on the first two symbols, else L+1.

    When G has a single symbol at some level, the pair that decides a split
    there continues into the next grammar, provided that grammar has not yet
    been separated at that level (``following_depth >= level``).
    """
    P = bundle.params
    v = list(G.start if isinstance(G, Grammar) else G)
    if not v:
        raise ValueError("splitting depth of an empty grammar")
    w = None
    if following is not None:
        w = list(following.start if isinstance(following, Grammar) else following)[:1] or None
    if following_depth is None:
        following_depth = P.L + 1
    d = P.L + 1
    for level in range(P.L, -1, -1):
        if len(v) >= 2:
            pair = (v[0], v[1])
        elif w is not None and following_depth >= level:
            pair = (v[0], w[0])
        else:
            pair = None
        if pair is not None and bundle.split_is_zero(level, *pair):
            d = level
        u = decompress_symbol(v[0], rules, level, 2, bundle)
        if len(v) >= 2:
            u += decompress_symbol(v[1], rules, level, 2, bundle)
        v = u
        if w is not None:
            w = decompress_symbol(w[0], rules, level, 1, bundle)[:1]
    return d


def splitting_depths(AG: Sequence[Grammar], rules: RuleTable, bundle: RandomnessBundle) -> list[int]:
    """Splitting depth of every grammar in AG, the first fixed to 0."""
    out = [0] * len(AG)
    nxt: Grammar | None = None
    nxt_depth = bundle.params.L + 1
    for i in range(len(AG) - 1, 0, -1):
        out[i] = splitting_depth(AG[i], rules, bundle, nxt, nxt_depth)
        nxt, nxt_depth = AG[i], out[i]
    return out


def partially_decompress(
    Z: Sequence[int], F: Sequence[int], level: int, G: RuleTable, bundle: RandomnessBundle
) -> LevelTrace:
    """Expand a suffix of Z one level down until it holds at least T symbols."""
    P = bundle.params
    al = bundle.alphabet
    T, top = P.T, P.L + 1
    out: list[int] = []  # built reversed, then flipped
    fout: list[int] = []
    for u in range(len(Z), 0, -1):
        c = Z[u - 1]
        if _is_level_repeat(al, c, level):
            base, r = al.repeat_parts(c)
            if len(out) + r <= T + 3:
                out.extend([base] * r)
                fout.extend([top] * (r - 1) + [F[u - 1]])
            else:
                rr = T - len(out) + 1
                out.extend([base] * rr)
                fout.extend([top] * rr)
                return LevelTrace(out[::-1], fout[::-1], u, rr)
        elif _is_level_comp(al, c, level):
            b, cc = G.get(c)
            out.extend((cc, b))
            fout.extend((top, F[u - 1]))
        else:
            out.append(c)
            fout.append(F[u - 1])
        if len(out) >= T:
            return LevelTrace(out[::-1], fout[::-1], u - 1, 0)
    return LevelTrace(out[::-1], fout[::-1], 0, 0)


# ---------------------------------------------------------------------------
# recompression


def cross_over_block(
    B: Sequence[int], Z: Sequence[int], u: int, level: int, bundle: RandomnessBundle
) -> tuple[list[int], dict[int, tuple[int, int]]]:
    """Compress block B joined to its already compressed remainder Z[1..u]."""
    R = bundle.params.R
    nB = len(B)
    i = 1
    while i < nB and i < 3 * (R + 1) and B[i - 1] != B[i]:
        i += 1
    rest = Z[u:]
    if i < nB and B[i - 1] == B[i]:
        comp, rules = compress_with_grammar(B[i - 1:], level, bundle)
        j = find_compressed_prefix(rest, i - 1, level, bundle)
        return list(Z[: u + j]) + list(comp), rules.pairs
    if nB <= 2 * R + 20:
        j = find_compressed_prefix(rest, nB, level, bundle)
        return list(Z[: u + j]), {}
    comp, rules = compress_with_grammar(B, level, bundle)
    p = find_compressed_prefix(comp, R + 10, level, bundle)
    j = find_compressed_prefix(rest, R + 10, level, bundle)
    return list(Z[: u + j - 1]) + list(comp[p - 1:]), rules.pairs


def recompress_first_block(
    B0: Sequence[int], Z: Sequence[int], F: Sequence[int], u: int, r: int, level: int, bundle: RandomnessBundle
) -> tuple[list[tuple[int, ...]], dict[int, tuple[int, int]], int]:
    """Blocks for B0 merged with the start of its level-(l-1) block in Z; returns (blocks, rules, u')."""
    al = bundle.alphabet
    if r != 0:
        u -= 1
    up = u + 1
    while up > 1 and F[up - 1] >= level:
        up -= 1
    rules: dict[int, tuple[int, int]] = {}
    # the block's start is in view unless the walk ran off the left end of Z
    visible = bool(Z) and F[up - 1] < level
    if r == 0 and len(B0) <= 2 and visible:
        # a level-(l-1) block of at most two symbols is never compressed
        whole = sum(decompress_symbol_length(c, level, bundle) for c in Z[up - 1: u]) + len(B0)
        if whole <= 2:
            return [tuple(Z[up - 1: u]) + tuple(B0)], rules, up - 1
    if r != 0:
        a, rfull = al.repeat_parts(Z[u])
        i = 1
        while i <= len(B0) and B0[i - 1] == a:
            i += 1
        # i is now one past the leading run of a's
        if i > len(B0):
            tail: list[int] = []
        else:
            comp, rs = compress_with_grammar(B0[i - 1:], level, bundle)
            tail = list(comp)
            rules = rs.pairs
        merged = list(Z[up - 1: u]) + [al.repeat(a, rfull - r + i - 1)] + tail
    else:
        merged, rules = cross_over_block(B0, Z[up - 1:], u - up + 1, level, bundle)
    return split(merged, level, bundle), rules, up - 1


def recompress(
    B: Sequence[Sequence[int]],
    Z: Sequence[int],
    F: Sequence[int],
    u: int,
    r: int,
    z: int,
    level: int,
    bundle: RandomnessBundle,
) -> tuple[list[tuple[int, ...]], dict[int, tuple[int, int]]]:
    """Level-l blocks for the updated string: remaining Z blocks, then recompressed B."""
    T = bundle.params.T
    out: list[tuple[int, ...]] = []
    rules: dict[int, tuple[int, int]] = {}
    if z < T:
        up, j = 0, 0
    else:
        first, rules, up = recompress_first_block(B[0], Z, F, u, r, level, bundle)
        out.extend(first)
        j = 1
    for Bi in B[j:]:
        if len(Bi) <= 2:
            out.append(tuple(Bi))
            continue
        comp, rs = compress_with_grammar(Bi, level, bundle)
        out.extend(split(comp, level, bundle))
        rules.update(rs.pairs)
    head: list[tuple[int, ...]] = []
    i = up
    while i > 0:
        while i > 1 and F[i - 1] > level:
            i -= 1
        head.append(tuple(Z[i - 1: up]))
        i -= 1
        up = i
    return head[::-1] + out, rules


def update_active_grammars(AG: Sequence[Grammar], a: int, bundle: RandomnessBundle) -> list[Grammar]:
    """Grammars replacing AG in the decomposition of x + a (AG = last min(s, T+1) grammars of x)."""
    P = bundle.params
    al = bundle.alphabet
    if not 0 <= a < P.sigma_size:
        raise ValueError(f"input symbol {a} outside the alphabet")
    G = RuleTable()
    for g in AG:
        G.add(g.rules)
    Z: list[int] = []
    F: list[int] = []
    for g, depth in zip(AG, splitting_depths(AG, G, bundle)):
        v = list(g.start)
        Z.extend(v)
        F.append(depth)
        F.extend([P.L + 1] * (len(v) - 1))
    # Zs[l], Fs[l]: the level-l string; us[l], rs[l]: how Zs[l] was expanded into Zs[l-1]
    Zs: list[list[int]] = [[] for _ in range(P.L + 1)]
    Fs: list[list[int]] = [[] for _ in range(P.L + 1)]
    us = [0] * (P.L + 1)
    rs = [0] * (P.L + 1)
    Zs[P.L], Fs[P.L] = Z, F
    for level in range(P.L, 0, -1):
        tr = partially_decompress(Zs[level], Fs[level], level, G, bundle)
        Zs[level - 1], Fs[level - 1], us[level], rs[level] = tr.Z, tr.F, tr.u, tr.r

    Zs[0] = Zs[0] + [a]
    blocks = split(Zs[0], 0, bundle)
    for level in range(1, P.L + 1):
        blocks, new_rules = recompress(
            blocks, Zs[level], Fs[level], us[level], rs[level], len(Zs[level - 1]), level, bundle
        )
        G.add(new_rules)
    if any(len(b) > 2 for b in blocks):
        raise DepthExceeded(f"block still longer than two symbols after level {P.L}")
    limit = 4 * P.T * P.L
    if len(blocks) > limit:
        raise AssertionError(f"update produced {len(blocks)} grammars, more than {limit}")
    return [prune(Grammar(tuple(b), G.rules, al)) for b in blocks]

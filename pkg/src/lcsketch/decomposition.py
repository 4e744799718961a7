"""Block decomposition of a string into small grammars.

``decompose`` splits the input at level 0, then repeatedly compresses each
block (runs become repeat symbols, other pairs are merged according to the
locally consistent coloring) and splits it again, until every block has at
most two symbols.  Each final block becomes one grammar.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

from .cvl import cvl_color
from .grammar_ops import Grammar
from .hashing import RandomnessBundle

HASH_MARK = -1  # the '#' placeholder that follows each repeat symbol


class DecompositionError(RuntimeError):
    pass


class SizeOverflow(DecompositionError):
    pass


class HashCollision(DecompositionError):
    pass


class DepthExceeded(DecompositionError):
    pass


@dataclass
class RuleSet:
    """Rules applied by one compression: pair rules and the repeat symbols created."""

    pairs: dict[int, tuple[int, int]] = field(default_factory=dict)
    repeats: set[int] = field(default_factory=set)

    def update(self, other: "RuleSet") -> None:
        self.pairs.update(other.pairs)
        self.repeats |= other.repeats

    def __len__(self) -> int:
        return len(self.pairs) + len(self.repeats)


def _compress(B: Sequence[int], level: int, bundle: RandomnessBundle, rules: RuleSet | None) -> list[int]:
    al = bundle.alphabet
    n = len(B)
    marked: list[int] = []
    colors: list[int] = []
    i = 0
    while i < n:
        j = i + 1
        while j < n and B[j] == B[i]:
            j += 1
        if j - i >= 2:
            r = al.repeat(B[i], j - i)
            if rules is not None:
                rules.repeats.add(r)
            marked += (r, HASH_MARK)
            colors += (1, 2)
            i = j
            continue
        # maximal stretch without equal neighbours: stop before the next run
        k = i + 1
        while k < n and not (k + 1 < n and B[k] == B[k + 1]):
            k += 1
        stretch = B[i:k]
        marked.extend(stretch)
        colors.extend(cvl_color(stretch, al.size))
        i = k

    out: list[int] = []
    m = len(marked)
    i = 0
    while i < m - 1:
        if colors[i] != 1:
            # a lone singleton in front of a run: it cannot pair with the repeat
            if marked[i] != HASH_MARK:
                out.append(marked[i])
            i += 1
            continue
        if marked[i + 1] == HASH_MARK:
            out.append(marked[i])
        else:
            a, b = marked[i], marked[i + 1]
            c = bundle.compress_pair(level, a, b)
            if rules is not None:
                rules.pairs[c] = (a, b)
            out.append(c)
        i += 2
        if i < m and colors[i] != 1:
            if marked[i] != HASH_MARK:
                out.append(marked[i])
            i += 1
    if i == m - 1 and marked[i] != HASH_MARK:
        out.append(marked[i])
    return out


def compress(B: Sequence[int], level: int, bundle: RandomnessBundle) -> tuple[int, ...]:
    if len(B) < 2:
        raise ValueError("compress needs a block of length at least two")
    return tuple(_compress(B, level, bundle, None))


def compress_with_grammar(B: Sequence[int], level: int, bundle: RandomnessBundle) -> tuple[tuple[int, ...], RuleSet]:
    if len(B) <= 1:
        return tuple(B), RuleSet()
    rules = RuleSet()
    return tuple(_compress(B, level, bundle, rules)), rules


def split(B: Sequence[int], level: int, bundle: RandomnessBundle) -> list[tuple[int, ...]]:
    B = tuple(B)
    n = len(B)
    if n < 3:
        return [B]
    starts = [0]
    zero = bundle.split_is_zero
    for i in range(1, n - 1):
        if zero(level, B[i], B[i + 1]):
            starts.append(i)
    starts.append(n)
    return [B[a:b] for a, b in zip(starts, starts[1:])]


def dictionary(B: Sequence[int]) -> set[tuple[int, int]]:
    return set(zip(B, B[1:]))


def assemble_grammar(
    B: Sequence[int], partial: Sequence[dict[int, tuple[int, int]]], level: int, bundle: RandomnessBundle
) -> Grammar:
    """Smallest grammar for B built from the level rule maps partial[0..level-1]."""
    al = bundle.alphabet
    rules: dict[int, tuple[int, int]] = {}
    stack = list(B)
    seen: set[int] = set()
    while stack:
        s = stack.pop()
        if s in seen or al.is_input(s):
            continue
        seen.add(s)
        if al.is_repeat(s):
            stack.append(al.repeat_parts(s)[0])
            continue
        lvl = al.level(s)
        if lvl > level or s not in partial[lvl - 1]:
            raise DecompositionError(f"no level-{lvl} rule for symbol {s}")
        a, b = partial[lvl - 1][s]
        rules[s] = (a, b)
        stack.append(a)
        stack.append(b)
    return Grammar(tuple(B), rules, al)


@dataclass
class _State:
    bundle: RandomnessBundle
    level_rules: list[dict[int, tuple[int, int]]]
    sink: Callable[[Grammar, int, tuple[int, ...]], None]


def _check_dict(B: Sequence[int], bundle: RandomnessBundle) -> None:
    limit = bundle.params.dict_limit
    if len(B) - 1 > limit and len(dictionary(B)) > limit:
        raise SizeOverflow(f"block dictionary larger than {limit}")


def _record_rules(B: Sequence[int], level: int, st: _State) -> None:
    table = st.level_rules[level - 1]
    cp = st.bundle.compress_pair
    for a, b in dictionary(B):
        c = cp(level, a, b)
        old = table.get(c)
        if old is None:
            table[c] = (a, b)
        elif old != (a, b):
            raise HashCollision(f"level-{level} symbol {c} stands for {old} and {(a, b)}")


def process(B: tuple[int, ...], level: int, st: _State) -> None:
    P = st.bundle.params
    if len(B) <= 2:
        G = assemble_grammar(B, st.level_rules, level - 1, st.bundle)
        if G.size > P.S:
            raise SizeOverflow(f"grammar of size {G.size} exceeds S={P.S}")
        st.sink(G, level - 1, B)
        return
    if level > P.L:
        raise DepthExceeded(f"block of length {len(B)} still open after level {P.L}")
    A = compress(B, level, st.bundle)
    _record_rules(B, level, st)
    for block in split(A, level, st.bundle):
        _check_dict(block, st.bundle)
        process(block, level + 1, st)


def decompose_blocks(x: Sequence[int], bundle: RandomnessBundle) -> list[tuple[Grammar, int, tuple[int, ...]]]:
    """Grammars with the level at which each block stopped and the block itself."""
    P = bundle.params
    x = tuple(x)
    if len(x) > P.n:
        raise ValueError(f"input longer than n={P.n}")
    if any(not 0 <= c < P.sigma_size for c in x):
        raise ValueError("input symbol outside the alphabet")
    out: list[tuple[Grammar, int, tuple[int, ...]]] = []
    st = _State(bundle, [dict() for _ in range(P.L)], lambda G, lvl, B: out.append((G, lvl, B)))
    if not x:
        return out
    for block in split(x, 0, bundle):
        _check_dict(block, bundle)
        process(block, 1, st)
    return out


def decompose(x: Sequence[int], bundle: RandomnessBundle) -> list[Grammar]:
    return [G for G, _, _ in decompose_blocks(x, bundle)]


def trivial_decomposition(x: Sequence[int], bundle: RandomnessBundle) -> list[Grammar]:
    al = bundle.alphabet
    return [Grammar((c,), {}, al) for c in x]


def decompose_safe(x: Sequence[int], bundle: RandomnessBundle) -> tuple[list[Grammar], str | None]:
    """Decompose, falling back to one grammar per symbol; returns (grammars, failure)."""
    try:
        return decompose(x, bundle), None
    except DecompositionError as exc:
        return trivial_decomposition(x, bundle), f"{type(exc).__name__}: {exc}"

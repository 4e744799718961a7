"""Brute-force references used by the tests and the acceptance suite.

The decomposition trace here is a separate, deliberately plain rewrite of
the block pipeline (run-length grouping with ``itertools.groupby``, colour
groups cut at every 1).  It shares only the alphabet, the hash bundle and the
coloring with the main implementation, so agreement between the two is
meaningful.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np

INF = float("inf")
DP_LIMIT = 10_000

EditOp = Literal["ins", "del", "sub"]


@dataclass(frozen=True)
class Edit:
    position: int  # 0-based index in the string the edit is applied to
    op: EditOp
    symbol: int | None


@dataclass(frozen=True)
class EditScript:
    edits: tuple[Edit, ...]

    def apply(self, x: Sequence[int]) -> tuple[int, ...]:
        y = list(x)
        for e in self.edits:
            if e.op == "ins":
                y.insert(e.position, e.symbol)
            elif e.op == "del":
                del y[e.position]
            else:
                y[e.position] = e.symbol
        return tuple(y)

    def __len__(self) -> int:
        return len(self.edits)


def edit_distance_dp(x: Sequence[int], y: Sequence[int]) -> int:
    """Exact edit distance by the row-by-row dynamic program."""
    if len(x) > DP_LIMIT or len(y) > DP_LIMIT:
        raise ValueError(f"inputs longer than {DP_LIMIT} are refused by the quadratic oracle")
    if not x:
        return len(y)
    if not y:
        return len(x)
    xa = np.asarray(x, dtype=np.int64)
    ya = np.asarray(y, dtype=np.int64)
    m = len(ya)
    idx = np.arange(m + 1, dtype=np.int64)
    row = idx.copy()
    for i, c in enumerate(xa, start=1):
        new = np.empty(m + 1, dtype=np.int64)
        new[0] = i
        new[1:] = np.minimum(row[1:] + 1, row[:-1] + (ya != c))
        # insertions: new[j] = min over j' <= j of new[j'] + (j - j')
        new = np.minimum.accumulate(new - idx) + idx
        row = new
    return int(row[m])


def banded_edit_distance(x: Sequence[int], y: Sequence[int], cutoff: int) -> float:
    """Edit distance if it is at most ``cutoff``, else infinity (diagonal method)."""
    n, m = len(x), len(y)
    if cutoff < 0:
        return INF
    if abs(n - m) > cutoff:
        return INF
    target = m - n

    def slide(i: int, d: int) -> int:
        while i < n and i + d < m and x[i] == y[i + d]:
            i += 1
        return i

    prev = {0: slide(0, 0)}
    if target == 0 and prev[0] >= n:
        return 0
    for e in range(1, cutoff + 1):
        cur = {}
        for d in range(-e, e + 1):
            best = -1
            if d in prev:
                best = prev[d] + 1
            if d + 1 in prev:
                best = max(best, prev[d + 1] + 1)
            if d - 1 in prev:
                best = max(best, prev[d - 1])
            if best < 0:
                continue
            # clamp to the grid: row <= n and column <= m
            best = min(best, n, m - d)
            if best < 0 or best + d < 0:
                continue
            cur[d] = slide(best, d)
        prev = cur
        if prev.get(target, -1) >= n:
            return e
    return INF


def random_edits(
    x: Sequence[int], k: int, rng: random.Random, sigma: int = 256
) -> tuple[tuple[int, ...], EditScript]:
    """Apply k random edits; the result is within edit distance k of x."""
    y = list(x)
    edits = []
    for _ in range(k):
        choice = rng.choice(("ins", "del", "sub")) if y else "ins"
        if choice == "ins":
            pos = rng.randint(0, len(y))
            sym = rng.randrange(sigma)
            y.insert(pos, sym)
            edits.append(Edit(pos, "ins", sym))
        elif choice == "del":
            pos = rng.randrange(len(y))
            del y[pos]
            edits.append(Edit(pos, "del", None))
        else:
            pos = rng.randrange(len(y))
            sym = rng.randrange(sigma)
            y[pos] = sym
            edits.append(Edit(pos, "sub", sym))
    return tuple(y), EditScript(tuple(edits))


# ---------------------------------------------------------------------------
# independent decomposition trace


@dataclass
class DecompositionTrace:
    """levels[l] lists the blocks present after the level-l split, left to right.

    A block that is already short (<= 2 symbols) is carried unchanged to
    the next level.  ``finals`` are the blocks handed to grammar assembly, in
    order, with the level at which each one stopped.
    """

    levels: list[list[tuple[int, ...]]]
    finals: list[tuple[int, int, tuple[int, ...]]]
    rules: dict[int, tuple[int, int]]

    def dump(self) -> str:
        lines = []
        for lvl, blocks in enumerate(self.levels):
            lines.append(f"level {lvl}: " + " | ".join(" ".join(map(str, b)) for b in blocks))
        return "\n".join(lines)


def _oracle_split(block: tuple[int, ...], level: int, bundle) -> list[tuple[int, ...]]:
    cuts = [i for i in range(1, len(block) - 1) if bundle.split_hash(level).is_zero(block[i], block[i + 1])]
    bounds = [0] + cuts + [len(block)]
    return [block[a:b] for a, b in zip(bounds, bounds[1:])]


def _oracle_compress(block: tuple[int, ...], level: int, bundle, rules: dict) -> tuple[int, ...]:
    from .cvl import cvl_color

    al = bundle.alphabet
    out: list[int] = []
    runs = [(sym, len(list(grp))) for sym, grp in itertools.groupby(block)]
    # stretches of singletons between runs
    stretch: list[int] = []

    def flush() -> None:
        if not stretch:
            return
        colors = cvl_color(stretch, al.size)
        groups: list[list[int]] = []
        for sym, col in zip(stretch, colors):
            if col == 1 or not groups:
                groups.append([sym])
            else:
                groups[-1].append(sym)
        for g in groups:
            if len(g) == 1:
                out.append(g[0])
            else:
                c = bundle.compression_hash(level)(g[0], g[1])
                rules[c] = (g[0], g[1])
                out.append(c)
                out.extend(g[2:])
        stretch.clear()

    for sym, count in runs:
        if count >= 2:
            flush()
            out.append(al.repeat(sym, count))
        else:
            stretch.append(sym)
    flush()
    return tuple(out)


def decompose_trace(x: Sequence[int], bundle) -> DecompositionTrace:
    P = bundle.params
    x = tuple(x)
    rules: dict[int, tuple[int, int]] = {}
    if not x:
        return DecompositionTrace([[]], [], rules)
    levels = [_oracle_split(x, 0, bundle)]
    finals: list[tuple[int, int, tuple[int, ...]]] = []
    # each entry: (block, done_level or None)
    live = [(b, None) for b in levels[0]]
    for level in range(1, P.L + 1):
        nxt = []
        for b, done in live:
            if done is not None or len(b) <= 2:
                nxt.append((b, level - 1 if done is None else done))
            else:
                nxt.extend((c, None) for c in _oracle_split(_oracle_compress(b, level, bundle, rules), level, bundle))
        live = nxt
        levels.append([b for b, _ in live])
        if all(done is not None or len(b) <= 2 for b, done in live):
            break
    for b, done in live:
        if done is None and len(b) > 2:
            raise RuntimeError("trace did not finish within L levels")
        finals.append((len(levels) - 1 if done is None else done, 0, b))
    finals = [(lvl, i, b) for i, (lvl, _, b) in enumerate(finals)]
    return DecompositionTrace(levels, finals, rules)


def expand_symbol(s: int, rules: dict[int, tuple[int, int]], alphabet) -> tuple[int, ...]:
    """Recursive full expansion used to check traces against the input."""
    if alphabet.is_input(s):
        return (s,)
    if alphabet.is_repeat(s):
        base, count = alphabet.repeat_parts(s)
        return expand_symbol(base, rules, alphabet) * count
    a, b = rules[s]
    return expand_symbol(a, rules, alphabet) + expand_symbol(b, rules, alphabet)

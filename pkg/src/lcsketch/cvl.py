"""Locally consistent 3-coloring of strings without equal neighbours.

The base coloring is Cole-Vishkin deterministic coin tossing: each position
compares its color with its left neighbour and keeps ``2*t + bit`` where ``t``
is the lowest bit where the two differ.  The number of rounds depends only on
the bit width of the alphabet, so position ``i`` depends on a fixed window
around ``i``.  Six colors are then cut down to three, and a few fixed
rewrites make every 3-window contain a 1 and pin down the ends.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

_SHORT = {1: (3,), 2: (1, 2), 3: (1, 2, 3), 4: (1, 2, 1, 2)}


class ColoringError(ValueError):
    pass


def cv_rounds(alphabet_size: int) -> int:
    """Number of coin-tossing rounds that bring |alphabet| colors down to six."""
    w = max(1, (alphabet_size - 1).bit_length())
    rounds = 0
    while w > 3:
        w = (2 * w - 1).bit_length()
        rounds += 1
    return rounds + 1


def locality_radius(alphabet_size: int) -> int:
    """A window radius that provably covers every dependency of the coloring.

    Coin tossing looks one step left per round; the three color eliminations and
    the two rewrite passes look one step each way; the end rewrites read up to
    four colors from an end.
    """
    return cv_rounds(alphabet_size) + 3 + 2 + 4


def _lowest_diff(a: int, b: int) -> int:
    d = a ^ b
    return (d & -d).bit_length() - 1


_NUMPY_MIN = 48  # below this length plain loops are faster


def base_six_coloring(x: Sequence[int], alphabet_size: int) -> list[int]:
    rounds = cv_rounds(alphabet_size)
    if len(x) < _NUMPY_MIN:
        colors = list(x)
        for _ in range(rounds):
            new = [colors[0] & 1]
            prev = colors[0]
            for c in colors[1:]:
                d = c ^ prev
                t = (d & -d).bit_length() - 1
                new.append(2 * t + ((c >> t) & 1))
                prev = c
            colors = new
        return colors
    if alphabet_size <= 1 << 62:
        arr = np.asarray(x, dtype=np.int64)
    else:
        # ords may not fit in 64 bits: first round on Python ints
        first = [x[0] & 1]
        for prev, c in zip(x, x[1:]):
            d = c ^ prev
            t = (d & -d).bit_length() - 1
            first.append(2 * t + ((c >> t) & 1))
        arr = np.asarray(first, dtype=np.int64)
        rounds -= 1
    for _ in range(rounds):
        cur, prev = arr[1:], arr[:-1]
        d = cur ^ prev
        t = np.bitwise_count((d & -d) - 1).astype(np.int64)
        out = np.empty_like(arr)
        out[0] = arr[0] & 1
        out[1:] = 2 * t + ((cur >> t) & 1)
        arr = out
    return arr.tolist()


def _neighbours(c: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    left = np.empty_like(c)
    right = np.empty_like(c)
    left[0], right[-1] = -1, -1
    left[1:], right[:-1] = c[:-1], c[1:]
    return left, right


def _reduce_to_three(colors: list[int]) -> list[int]:
    # positions of one color are never adjacent, so each pass can run in parallel
    c = np.asarray(colors, dtype=np.int64)
    for target in (5, 4, 3):
        hit = c == target
        if not hit.any():
            continue
        left, right = _neighbours(c)
        cand = np.where((left != 0) & (right != 0), 0, np.where((left != 1) & (right != 1), 1, 2))
        c = np.where(hit, cand, c)
    return (c + 1).tolist()


def _replace_parallel(colors: list[int], outer: int, mid: int) -> list[int]:
    c = np.asarray(colors, dtype=np.int64)
    left, right = _neighbours(c)
    hit = (c == mid) & (left == outer) & (right == outer)
    hit[0] = hit[-1] = False
    return np.where(hit, 1, c).tolist()


def _reduce_to_three_loop(colors: list[int]) -> list[int]:
    n = len(colors)
    for target in (5, 4, 3):
        out = colors[:]
        for i, c in enumerate(colors):
            if c == target:
                left = colors[i - 1] if i > 0 else -1
                right = colors[i + 1] if i + 1 < n else -1
                for cand in (0, 1, 2):
                    if cand != left and cand != right:
                        out[i] = cand
                        break
        colors = out
    return [c + 1 for c in colors]


def _replace_parallel_loop(colors: list[int], outer: int, mid: int) -> list[int]:
    out = colors[:]
    for i in range(1, len(colors) - 1):
        if colors[i] == mid and colors[i - 1] == outer and colors[i + 1] == outer:
            out[i] = 1
    return out


def _patch_ends(c: list[int]) -> list[int]:
    c = c[:]
    a, b, d, e = c[0], c[1], c[2], c[3]
    if a != 1 and b != 1 and d == 1:
        c[0:3] = [1, 2, 1]
    elif a != 1 and b == 1 and d != 1 and e != 1:
        c[0:4] = [1, 2, 1, 2]
    elif a != 1 and b == 1 and d != 1 and e == 1:
        c[0:4] = [1, 2, 3, 1]
    if c[-3] == 1 and c[-2] != 1 and c[-1] == 1:
        c[-3:] = [1, 2, 3]
    elif c[-4] == 1 and c[-3] != 1 and c[-2] != 1 and c[-1] == 1:
        c[-4:] = [1, 2, 1, 2]
    return c


def cvl_color(x: Sequence[int], alphabet_size: int) -> list[int]:
    """Color ``x`` (ords, no equal neighbours) with {1,2,3}."""
    n = len(x)
    if n == 0:
        raise ColoringError("cannot color the empty string")
    for i in range(1, n):
        if x[i] == x[i - 1]:
            raise ColoringError(f"equal neighbours at positions {i} and {i + 1}")
    if n <= 4:
        return list(_SHORT[n])
    colors = base_six_coloring(x, alphabet_size)
    if n < _NUMPY_MIN:
        colors = _reduce_to_three_loop(colors)
        colors = _replace_parallel_loop(colors, 2, 3)
        colors = _replace_parallel_loop(colors, 3, 2)
    else:
        colors = _reduce_to_three(colors)
        colors = _replace_parallel(colors, 2, 3)
        colors = _replace_parallel(colors, 3, 2)
    return _patch_ends(colors)


def check_coloring(colors: Sequence[int]) -> list[str]:
    """Return the list of violated coloring properties (empty when all hold)."""
    problems = []
    n = len(colors)
    if any(c not in (1, 2, 3) for c in colors):
        problems.append("color outside {1,2,3}")
    if any(colors[i] == colors[i + 1] for i in range(n - 1)):
        problems.append("equal adjacent colors")
    if any(1 not in colors[i:i + 3] for i in range(n - 2)):
        problems.append("3-window without a 1")
    if n == 1 and list(colors) != [3]:
        problems.append("single symbol not colored 3")
    if n >= 2 and (colors[0] != 1 or colors[-1] not in (2, 3)):
        problems.append("bad endpoints")
    return problems

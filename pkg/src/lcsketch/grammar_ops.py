"""Deterministic grammars over the working alphabet.

A grammar is its start rule ``# -> start`` plus a map of pair rules
``c -> (a, b)``.  Repeat rules ``r_{a,r} -> a^r`` are implicit in the repeat
ords.  Evaluation is over input symbols only.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .core import Alphabet
from .oracle_testkit import banded_edit_distance

INF = float("inf")
DEFAULT_EVAL_BUDGET = 1 << 26


class GrammarError(ValueError):
    pass


class UndefinedSymbol(GrammarError):
    pass


class CyclicGrammar(GrammarError):
    pass


class EvalBudgetExceeded(GrammarError):
    pass


@dataclass(frozen=True, eq=False)
class Grammar:
    start: tuple[int, ...]
    rules: Mapping[int, tuple[int, int]]
    alphabet: Alphabet = field(repr=False)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Grammar):
            return NotImplemented
        return self.start == other.start and dict(self.rules) == dict(other.rules)

    def __hash__(self) -> int:
        return hash((self.start, frozenset(self.rules.items())))

    def repeat_symbols(self) -> set[int]:
        al = self.alphabet
        found = {s for s in self.start if al.is_repeat(s)}
        for a, b in self.rules.values():
            if al.is_repeat(a):
                found.add(a)
            if al.is_repeat(b):
                found.add(b)
        return found

    @property
    def size(self) -> int:
        """Rule count: the start rule, pair rules and one rule per repeat symbol."""
        return 1 + len(self.rules) + len(self.repeat_symbols())

    def sorted_rules(self) -> list[tuple[int, tuple[int, int]]]:
        return sorted(self.rules.items())


def make_grammar(start: Iterable[int], rules: Mapping[int, tuple[int, int]], alphabet: Alphabet) -> Grammar:
    return Grammar(tuple(start), dict(rules), alphabet)


def _children(G: Grammar, s: int) -> tuple[int, ...]:
    al = G.alphabet
    if al.is_input(s):
        return ()
    if al.is_repeat(s):
        return (al.repeat_parts(s)[0],)
    rule = G.rules.get(s)
    if rule is None:
        raise UndefinedSymbol(f"no rule for symbol {s}")
    return rule


def _topo_order(G: Grammar) -> list[int]:
    """Non-input symbols reachable from the start, children before parents."""
    order: list[int] = []
    state: dict[int, int] = {}
    al = G.alphabet
    for root in G.start:
        if al.is_input(root) or state.get(root) == 2:
            continue
        stack = [(root, iter(_children(G, root)))]
        state[root] = 1
        while stack:
            node, it = stack[-1]
            for ch in it:
                if al.is_input(ch):
                    continue
                st = state.get(ch)
                if st == 1:
                    raise CyclicGrammar(f"symbol {ch} is reachable from itself")
                if st is None:
                    state[ch] = 1
                    stack.append((ch, iter(_children(G, ch))))
                    break
            else:
                stack.pop()
                state[node] = 2
                order.append(node)
    return order


def symbol_sizes(G: Grammar) -> dict[int, int]:
    al = G.alphabet
    sizes: dict[int, int] = {}
    for s in _topo_order(G):
        if al.is_repeat(s):
            base, count = al.repeat_parts(s)
            sizes[s] = count * (1 if al.is_input(base) else sizes[base])
        else:
            a, b = G.rules[s]
            sizes[s] = (1 if al.is_input(a) else sizes[a]) + (1 if al.is_input(b) else sizes[b])
    return sizes


def eval_size(G: Grammar) -> int:
    sizes = symbol_sizes(G)
    al = G.alphabet
    return sum(1 if al.is_input(s) else sizes[s] for s in G.start)


def eval_grammar(G: Grammar, budget: int = DEFAULT_EVAL_BUDGET) -> tuple[int, ...]:
    """Full expansion of G over input symbols."""
    if eval_size(G) > budget:
        raise EvalBudgetExceeded(f"evaluation longer than budget {budget}")
    al = G.alphabet
    memo: dict[int, tuple[int, ...]] = {}
    for s in _topo_order(G):
        if al.is_repeat(s):
            base, count = al.repeat_parts(s)
            memo[s] = ((base,) if al.is_input(base) else memo[base]) * count
        else:
            a, b = G.rules[s]
            memo[s] = ((a,) if al.is_input(a) else memo[a]) + ((b,) if al.is_input(b) else memo[b])
    out: list[int] = []
    for s in G.start:
        if al.is_input(s):
            out.append(s)
        else:
            out.extend(memo[s])
    return tuple(out)


def prune(G: Grammar) -> Grammar:
    """Keep only pair rules reachable from the start symbol."""
    keep = {}
    for s in _topo_order(G):
        if s in G.rules and not G.alphabet.is_repeat(s):
            keep[s] = G.rules[s]
    return Grammar(G.start, keep, G.alphabet)


def suffix_grammar(G: Grammar, m: int) -> Grammar:
    """Grammar for eval(G)[m..] (1-based m, 1 <= m <= eval_size+1).

    The result keeps the original rules and replaces the start with the
    right spine of the cut: at most two symbols per level plus one shortened
    repeat, so its size stays within a constant factor of |G|.
    """
    sizes = symbol_sizes(G)
    al = G.alphabet

    def size_of(s: int) -> int:
        return 1 if al.is_input(s) else sizes[s]

    total = sum(size_of(s) for s in G.start)
    if not 1 <= m <= total + 1:
        raise ValueError(f"suffix start {m} outside [1, {total + 1}]")
    skip = m - 1
    start: list[int] = []
    seq = list(G.start)
    # tail is accumulated from the deepest level outward, in reverse
    pending: list[list[int]] = []
    while True:
        i = 0
        while i < len(seq) and skip >= size_of(seq[i]):
            skip -= size_of(seq[i])
            i += 1
        if i == len(seq):
            break
        if skip == 0:
            pending.append(seq[i:])
            break
        s = seq[i]
        pending.append(seq[i + 1:])
        if al.is_repeat(s):
            base, count = al.repeat_parts(s)
            bsize = size_of(base)
            whole, skip = divmod(skip, bsize)
            left = count - whole
            if skip == 0:
                rest = left
                prefix: list[int] = []
            else:
                rest = left - 1
                prefix = [base]
            tail = [] if rest == 0 else [base] if rest == 1 else [al.repeat(base, rest)]
            pending.append(tail)
            if not prefix:
                break
            seq = prefix
        else:
            a, b = G.rules[s]
            seq = [a, b]
    for part in reversed(pending):
        start.extend(part)
    return prune(Grammar(tuple(start), dict(G.rules), al))


def grammar_pair_ed(Gx: Grammar, Gy: Grammar, cutoff: int, budget: int = DEFAULT_EVAL_BUDGET) -> float:
    """Edit distance of the evaluations if at most ``cutoff``, else infinity."""
    if Gx == Gy:
        return 0
    sx, sy = eval_size(Gx), eval_size(Gy)
    if abs(sx - sy) > cutoff:
        return INF
    if sx + sy > budget:
        return INF
    return banded_edit_distance(eval_grammar(Gx), eval_grammar(Gy), cutoff)


def dump_grammar(G: Grammar) -> str:
    """One-line ord-encoded text form: ``# a b ; c>a,b ; ...``."""
    parts = ["# " + " ".join(str(s) for s in G.start)]
    parts += [f"{c}>{a},{b}" for c, (a, b) in G.sorted_rules()]
    return " ; ".join(parts)


def parse_grammar(text: str, alphabet: Alphabet) -> Grammar:
    parts = [p.strip() for p in text.split(";")]
    if not parts or not parts[0].startswith("#"):
        raise ValueError("grammar text must start with the start rule")
    start = tuple(int(t) for t in parts[0][1:].split())
    rules = {}
    for p in parts[1:]:
        if not p:
            continue
        lhs, rhs = p.split(">")
        a, b = rhs.split(",")
        rules[int(lhs)] = (int(a), int(b))
    return Grammar(start, rules, alphabet)


sys.setrecursionlimit(max(sys.getrecursionlimit(), 10000))

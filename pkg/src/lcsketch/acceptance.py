"""Statistical acceptance suite.

Each ``check_*`` function runs one property over random trials and returns a
:class:`CriterionResult`.  Ground truth always comes from the brute-force
oracles in :mod:`lcsketch.oracle_testkit`, never from the pipeline itself.

Criteria marked ``informational`` repeat a check under stress parameters
(small D and T) where strings split into many grammars and the
rolling sketch actually commits; they are reported but do not gate.
"""

from __future__ import annotations

import dataclasses
import math
import random
import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

from .core import Params, derive_params
from .decomposition import DecompositionError, compress, decompose
from .active_update import update_active_grammars
from .ed_sketch import ed_compare, ed_sketch, majority
from .encoding import decode_columns, enc, pack_width
from .grammar_ops import INF, Grammar, dump_grammar, eval_grammar, parse_grammar
from .hamming_sketch import INFINITE, Mismatch, ham_compare, ham_of_known
from .hashing import RandomnessBundle, bundle_generate, copy_bundles, derived_seed
from .oracle_testkit import edit_distance_dp, random_edits
from .rolling_sketch import RollingSketch, rolling_append, rolling_compare, rolling_new, rolling_remove


@dataclass
class CriterionResult:
    key: str
    name: str
    passed: bool
    measured: str
    threshold: str
    seconds: float
    informational: bool = False
    details: dict = field(default_factory=dict)

    def line(self) -> str:
        tag = "INFO" if self.informational else ("PASS" if self.passed else "FAIL")
        status = "" if not self.informational else (" ok" if self.passed else " below")
        return f"[{tag}] {self.key} {self.name}: {self.measured} (need {self.threshold}){status} [{self.seconds:.1f}s]"

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass(frozen=True)
class Sizes:
    """Trial counts and size bounds; the defaults are the full acceptance sizes."""

    decomp_trials: int = 100
    decomp_n: int = 4096
    compress_blocks: int = 10_000
    locality_trials: int = 200
    locality_n: int = 2048
    locality_k: int = 8
    static_trials: int = 100
    static_far_trials: int = 20
    static_n: int = 2048
    static_k: int = 6
    static_copies: int = 9
    ham_trials: int = 500
    ham_kmax: int = 64
    ham_len: int = 100_000
    update_trials: int = 200
    update_len: int = 512
    suffix_trials: int = 200
    rolling_trials: int = 100
    rolling_window: int = 1024
    rolling_prefix: int = 256
    rolling_copies: int = 3
    rolling_k: int = 6
    encoding_grammars: int = 300
    encoding_keys: int = 20
    stress_fraction: float = 0.25

    @classmethod
    def reduced(cls, trials: int, n: int | None = None, k: int | None = None) -> "Sizes":
        """Every trial count capped at ``trials``; ``n`` and ``k`` cap lengths and thresholds."""
        base = cls()
        out = {}
        for f in dataclasses.fields(cls):
            v = getattr(base, f.name)
            if f.name.endswith(("trials", "blocks", "grammars")):
                v = min(v, trials)
            out[f.name] = v
        if n is not None:
            for name in ("decomp_n", "locality_n", "static_n", "update_len", "rolling_window"):
                out[name] = min(out[name], n)
            out["rolling_prefix"] = min(out["rolling_prefix"], max(1, n // 4))
            out["ham_len"] = min(out["ham_len"], 50 * n)
        if k is not None:
            out["static_k"] = min(out["static_k"], k)
            out["rolling_k"] = min(out["rolling_k"], k)
            out["locality_k"] = min(out["locality_k"], k)
        return cls(**out)


def stress_params(n: int, k: int, T: int = 48) -> Params:
    """Desk parameters with a tiny split range D and a short active list T.

    Short strings then split into hundreds of grammars and the rolling
    sketch commits on almost every append.  L and R keep their desk values:
    smaller L runs out of levels and smaller R undercuts the coloring's
    locality radius.
    """
    return dataclasses.replace(derive_params(n, k), D=3, T=T)


def _random_string(rng: random.Random, length: int) -> list[int]:
    sigma = rng.choice((2, 4, 26, 256))
    return [rng.randrange(sigma) for _ in range(length)]


def _run_heavy_string(rng: random.Random, length: int) -> list[int]:
    out: list[int] = []
    while len(out) < length:
        c = rng.randrange(256)
        out.extend([c] * rng.choice((1, 1, 2, 3, 7, 40, 100)))
    return out[:length]


def _bundle(P: Params, seed: int, index: int) -> RandomnessBundle:
    return bundle_generate(P, derived_seed(seed, index))


def _truth(x: Sequence[int], y: Sequence[int], k: int) -> float:
    d = edit_distance_dp(x, y)
    return d if d <= k else INF


def _ratio(a: int, b: int) -> str:
    return f"{a}/{b}" + (f" ({100 * a / b:.1f}%)" if b else "")


# ---------------------------------------------------------------------------
# decomposition


def check_decomposition(sz: Sizes, seed: int) -> CriterionResult:
    t0 = time.perf_counter()
    rng = random.Random(seed)
    P = derive_params(sz.decomp_n, 6)
    ok = 0
    spent = 0.0
    for i in range(sz.decomp_trials):
        b = _bundle(P, seed, i)
        x = _random_string(rng, rng.randint(1, P.n))
        t = time.perf_counter()
        try:
            grammars = decompose(x, b)
        except DecompositionError:
            spent += time.perf_counter() - t
            continue
        spent += time.perf_counter() - t
        ok += [s for G in grammars for s in eval_grammar(G)] == x
    need = math.ceil(0.99 * sz.decomp_trials)
    return CriterionResult(
        "C1", "decomposition evaluates back to x",
        ok >= need and spent < 30, f"{_ratio(ok, sz.decomp_trials)}, decompose time {spent:.1f}s",
        f">= {need}/{sz.decomp_trials} and < 30s", time.perf_counter() - t0,
    )


def check_compression(sz: Sizes, seed: int) -> CriterionResult:
    t0 = time.perf_counter()
    rng = random.Random(seed)
    P = derive_params(4096, 6)
    b = _bundle(P, seed, 0)
    bad = 0
    for _ in range(sz.compress_blocks):
        B = _random_string(rng, rng.randint(2, 500))
        out = compress(B, rng.randint(1, P.L), b)
        if not (len(out) <= 2 * len(B) // 3 + 1 and len(out) < len(B)):
            bad += 1
    return CriterionResult(
        "C2", "compress shrinks every block", bad == 0,
        f"{bad} violations in {sz.compress_blocks} blocks", "0 violations", time.perf_counter() - t0,
    )


def _locality(P: Params, sz: Sizes, seed: int, trials: int) -> tuple[int, int, int, int]:
    """(good, wrong_finite, flagged, trials)."""
    rng = random.Random(seed)
    good = wrong = flagged = 0
    for i in range(trials):
        b = _bundle(P, seed, i)
        edits = rng.randint(0, sz.locality_k)
        x = _random_string(rng, rng.randint(1, P.n - edits))
        y, _ = random_edits(x, edits, rng)
        try:
            gx, gy = decompose(x, b), decompose(y, b)
        except DecompositionError:
            flagged += 1
            continue
        if len(gx) != len(gy):
            continue
        diff = [j for j, (a, c) in enumerate(zip(gx, gy)) if a != c]
        if len(diff) > edits:
            continue
        total = sum(edit_distance_dp(eval_grammar(gx[j]), eval_grammar(gy[j])) for j in diff)
        if total == edit_distance_dp(x, y):
            good += 1
        else:
            wrong += 1
    return good, wrong, flagged, trials


def check_locality(sz: Sizes, seed: int) -> CriterionResult:
    t0 = time.perf_counter()
    P = derive_params(sz.locality_n, sz.locality_k)
    good, wrong, flagged, n = _locality(P, sz, seed, sz.locality_trials)
    need = math.ceil(0.85 * n)
    return CriterionResult(
        "C3", "edits stay local to aligned grammars", good >= need,
        f"{_ratio(good, n)} aligned with exact block ED sum, {wrong} ED-sum mismatches, {flagged} flagged",
        f">= {need}/{n}", time.perf_counter() - t0,
    )


def check_locality_stress(sz: Sizes, seed: int) -> CriterionResult:
    t0 = time.perf_counter()
    P = stress_params(sz.locality_n, sz.locality_k)
    trials = max(1, int(sz.locality_trials * sz.stress_fraction))
    good, wrong, flagged, n = _locality(P, sz, seed + 1, trials)
    return CriterionResult(
        "C3s", "locality under stress parameters", good >= math.ceil(0.85 * n),
        f"{_ratio(good, n)} aligned, {wrong} ED-sum mismatches, {flagged} flagged",
        ">= 85%", time.perf_counter() - t0, informational=True,
    )


# ---------------------------------------------------------------------------
# static sketch


def _early_majority(answers: Callable[[int], float], copies: int) -> tuple[float, list[float]]:
    """Majority over ``copies`` answers, stopping once the outcome is fixed."""
    need = copies // 2 + 1
    seen: list[float] = []
    counts: dict[float, int] = {}
    for c in range(copies):
        v = answers(c)
        seen.append(v)
        counts[v] = counts.get(v, 0) + 1
        if counts[v] >= need:
            return v, seen
        if max(counts.values()) + copies - len(seen) < need:
            return INF, seen
    return majority(seen), seen


def check_static(sz: Sizes, seed: int) -> CriterionResult:
    t0 = time.perf_counter()
    rng = random.Random(seed)
    k = sz.static_k
    P = derive_params(sz.static_n, k)
    single = maj = wrong = far_ok = 0
    for i in range(sz.static_trials + sz.static_far_trials):
        far = i >= sz.static_trials
        while True:
            edits = rng.randint(2 * k, 4 * k) if far else rng.randint(0, k)
            x = _random_string(rng, rng.randint(1, P.n - edits))
            y, _ = random_edits(x, edits, rng)
            d = edit_distance_dp(x, y)
            if not far or d > k:
                break
        bundles = copy_bundles(_bundle(P, seed, i), sz.static_copies)
        cache: dict[int, float] = {}

        def answer(c: int) -> float:
            if c not in cache:
                cache[c] = ed_compare(ed_sketch(x, bundles[c]), ed_sketch(y, bundles[c]), bundles[c])
            return cache[c]

        voted, seen = _early_majority(answer, sz.static_copies)
        wrong += sum(1 for v in seen if v != INF and v != d)
        if far:
            far_ok += voted == INF and all(v == INF for v in seen)
        else:
            single += answer(0) == d
            maj += voted == d
    n, nf = sz.static_trials, sz.static_far_trials
    need1, need9 = math.ceil(2 * n / 3), math.ceil(0.95 * n)
    passed = single >= need1 and maj >= need9 and wrong == 0 and far_ok == nf
    return CriterionResult(
        "C4", "static sketch returns exact ED", passed,
        f"single copy {_ratio(single, n)}, {sz.static_copies}-copy majority {_ratio(maj, n)}, "
        f"wrong finite answers {wrong}, far pairs INF {far_ok}/{nf}",
        f"single >= {need1}, majority >= {need9}, 0 wrong, all far INF", time.perf_counter() - t0,
    )


# ---------------------------------------------------------------------------
# Hamming sketch


def check_hamming(sz: Sizes, seed: int) -> CriterionResult:
    t0 = time.perf_counter()
    rng = random.Random(seed)
    P = derive_params(4096, 6)
    b = _bundle(P, seed, 0)
    exact = inf_ok = n_exact = n_over = 0
    for i in range(sz.ham_trials):
        kcap = rng.randint(1, sz.ham_kmax)
        length = rng.randint(kcap + 1, sz.ham_len) if i % 10 else rng.randint(1, 200)
        over = i % 5 == 4
        m = rng.randint(kcap + 1, min(length, 2 * kcap + 8)) if over else rng.randint(0, min(kcap, length))
        if over and m <= kcap:
            over = False
        x = [rng.randrange(1, 1 << 40) for _ in range(length)]
        y = list(x)
        planted = []
        for pos in sorted(rng.sample(range(length), m)):
            y[pos] = x[pos] + rng.randrange(1, 1 << 20)
            planted.append(Mismatch(pos, x[pos], y[pos]))
        got = ham_compare(ham_of_known(x, 0, P, kcap, b), ham_of_known(y, 0, P, kcap, b))
        if over:
            n_over += 1
            inf_ok += got is INFINITE
        else:
            n_exact += 1
            exact += got is not INFINITE and sorted(got, key=lambda z: z.index) == planted
    passed = exact == n_exact and inf_ok == n_over
    return CriterionResult(
        "C5", "Hamming sketch recovers planted mismatches", passed,
        f"exact {_ratio(exact, n_exact)}, over capacity INF {_ratio(inf_ok, n_over)}",
        "100% and 100%", time.perf_counter() - t0,
    )


# ---------------------------------------------------------------------------
# incremental update


def _update_trials(P: Params, sz: Sizes, seed: int, trials: int) -> tuple[int, int, int]:
    """(equal, flagged, trials) for update_active_grammars against decompose."""
    rng = random.Random(seed)
    equal = flagged = 0
    for i in range(trials):
        b = _bundle(P, seed, i)
        length = rng.randint(0, sz.update_len)
        kind = i % 4
        if kind == 0:
            c = rng.randrange(256)
            x, a = [c] * min(length, 100 + rng.randint(0, 8)), c
        elif kind == 1:
            x, a = _run_heavy_string(rng, length), rng.randrange(256)
        else:
            x = _random_string(rng, length)
            a = rng.choice(x) if x else 0
        try:
            before = decompose(x, b)
            after = decompose(x + [a], b)
            ctx = before[len(before) - min(len(before), P.T + 1):]
            got = before[: len(before) - len(ctx)] + update_active_grammars(ctx, a, b)
        except DecompositionError:
            flagged += 1
            continue
        equal += [dump_grammar(G) for G in got] == [dump_grammar(G) for G in after]
    return equal, flagged, trials


def check_update(sz: Sizes, seed: int) -> CriterionResult:
    t0 = time.perf_counter()
    desk = _update_trials(derive_params(4096, 6), sz, seed, sz.update_trials)
    stress = _update_trials(stress_params(4096, 3), sz, seed + 1, sz.update_trials)
    eq = desk[0] + stress[0]
    flagged = desk[1] + stress[1]
    total = desk[2] + stress[2]
    return CriterionResult(
        "C6", "appending a symbol matches decomposing from scratch", eq == total - flagged,
        f"desk {desk[0]}/{desk[2] - desk[1]}, stress {stress[0]}/{stress[2] - stress[1]} "
        f"({flagged} flagged)", "100% of unflagged", time.perf_counter() - t0,
    )


def _suffix_trials(P: Params, sz: Sizes, seed: int, trials: int) -> tuple[int, int, int, int]:
    """(stable, flagged, trials, trials whose prefix comparison is non-empty)."""
    rng = random.Random(seed)
    stable = flagged = nonempty = 0
    for i in range(trials):
        b = _bundle(P, seed, i)
        x = _random_string(rng, rng.randint(1, 2048))
        z = _random_string(rng, rng.randint(1, 512))
        try:
            gx, gxz = decompose(x, b), decompose(x + z, b)
        except DecompositionError:
            flagged += 1
            continue
        keep = max(0, len(gx) - P.T)
        nonempty += keep > 0
        stable += gx[:keep] == gxz[:keep]
    return stable, flagged, trials, nonempty


def check_suffix(sz: Sizes, seed: int) -> CriterionResult:
    t0 = time.perf_counter()
    trials = sz.suffix_trials // 2
    desk = _suffix_trials(derive_params(4096, 6), sz, seed, trials)
    stress = _suffix_trials(stress_params(4096, 3), sz, seed + 1, sz.suffix_trials - trials)
    ok = desk[0] + stress[0]
    unflagged = desk[2] - desk[1] + stress[2] - stress[1]
    return CriterionResult(
        "C7", "appending leaves all but the last T grammars unchanged", ok == unflagged,
        f"desk {desk[0]}/{desk[2] - desk[1]}, stress {stress[0]}/{stress[2] - stress[1]} "
        f"(non-trivial prefix in {desk[3] + stress[3]})", "100% of unflagged", time.perf_counter() - t0,
    )


# ---------------------------------------------------------------------------
# rolling sketch


@dataclass
class _RollStats:
    good: int = 0
    trials: int = 0
    ring_violations: int = 0
    worst_op: float = 0.0
    ops: int = 0
    commits: int = 0
    aligned: int = 0
    failures: int = 0


def _ring_ids(sk: RollingSketch) -> tuple:
    return tuple(id(c) for c in sk.ins.ring), tuple(id(c) for c in sk.dels.ring)


def _timed_op(sk: RollingSketch, op: Callable[[RollingSketch, int], None], a: int, st: _RollStats) -> None:
    before, commits = _ring_ids(sk), sk.commits
    t = time.perf_counter()
    op(sk, a)
    st.worst_op = max(st.worst_op, time.perf_counter() - t)
    st.ops += 1
    if sk.commits == commits and _ring_ids(sk) != before:
        st.ring_violations += 1


def _roll_stream(bundles, prefix, window, st: _RollStats) -> list[RollingSketch]:
    copies = []
    for b in bundles:
        sk = rolling_new(b.params, b)
        for a in prefix + window:
            _timed_op(sk, rolling_append, a, st)
        for a in prefix:
            _timed_op(sk, rolling_remove, a, st)
        st.commits += sk.commits
        copies.append(sk)
    return copies


def _rolling_trials(P: Params, sz: Sizes, seed: int, trials: int, copies: int) -> _RollStats:
    rng = random.Random(seed)
    st = _RollStats()
    lo = math.log(16)
    for i in range(trials):
        bundles = copy_bundles(_bundle(P, seed, i), copies)
        w = min(sz.rolling_window, int(math.exp(rng.uniform(lo, math.log(sz.rolling_window + 1)))))
        x = _random_string(rng, w)
        edits = rng.randint(0, P.k + 3)
        y, _ = random_edits(x, edits, rng)
        y = list(y)[: sz.rolling_window]
        u = _random_string(rng, rng.randint(0, sz.rolling_prefix))
        v = u if rng.random() < 0.3 else _random_string(rng, rng.randint(0, sz.rolling_prefix))
        sx = _roll_stream(bundles, u, x, st)
        sy = _roll_stream(bundles, v, y, st)
        st.failures += sum(1 for s in sx + sy if s.failure)
        st.aligned += max(sx[0].spread, sy[0].spread) >= 10 * P.T
        got = majority([rolling_compare(a, c) for a, c in zip(sx, sy)])
        st.good += got == _truth(x, y, P.k)
        st.trials += 1
    return st


def check_rolling(sz: Sizes, seed: int) -> CriterionResult:
    t0 = time.perf_counter()
    P = derive_params(4096, sz.rolling_k)
    st = _rolling_trials(P, sz, seed, sz.rolling_trials, sz.rolling_copies)
    need = math.ceil(0.95 * st.trials)
    passed = st.good >= need and st.ring_violations == 0 and st.worst_op < 0.05
    return CriterionResult(
        "C8", "rolling sketch tracks the window ED", passed,
        f"{_ratio(st.good, st.trials)} correct, ring changes outside commits {st.ring_violations}, "
        f"slowest op {1000 * st.worst_op:.1f} ms over {st.ops} ops",
        f">= {need}/{st.trials}, 0 ring changes, < 50 ms", time.perf_counter() - t0,
        details=dataclasses.asdict(st),
    )


def check_rolling_stress(sz: Sizes, seed: int) -> CriterionResult:
    t0 = time.perf_counter()
    P = stress_params(4096, 3, T=48)
    trials = max(1, int(sz.rolling_trials * sz.stress_fraction))
    st = _rolling_trials(P, sz, seed + 1, trials, sz.rolling_copies)
    passed = st.good >= math.ceil(0.95 * st.trials) and st.ring_violations == 0
    return CriterionResult(
        "C8s", "rolling sketch under stress parameters", passed,
        f"{_ratio(st.good, st.trials)} correct, {st.commits} commits, {st.aligned} aligned-branch trials, "
        f"{st.failures} flagged copies, ring changes outside commits {st.ring_violations}",
        ">= 95%", time.perf_counter() - t0, informational=True, details=dataclasses.asdict(st),
    )


# ---------------------------------------------------------------------------
# encoding


def _rebuilt(G: Grammar) -> Grammar:
    """Equal grammar built independently: rules inserted in reverse order via the text form."""
    H = parse_grammar(dump_grammar(G), G.alphabet)
    return Grammar(H.start, dict(reversed(list(H.rules.items()))), H.alphabet)


def check_encoding(sz: Sizes, seed: int) -> CriterionResult:
    t0 = time.perf_counter()
    rng = random.Random(seed)
    P = stress_params(4096, 3)
    b = _bundle(P, seed, 0)
    keys = [_bundle(P, seed, j + 1).kr for j in range(sz.encoding_keys)]
    g = pack_width(P)
    same = roundtrip = differ = pairs = 0
    grammars = 0
    while grammars < sz.encoding_grammars:
        x = _random_string(rng, rng.randint(2, 300))
        y, _ = random_edits(x, rng.randint(1, 3), rng)
        try:
            gx, gy = decompose(x, b), decompose(list(y), b)
        except DecompositionError:
            continue
        G = gx[rng.randrange(len(gx))]
        grammars += 1
        e1, e2 = enc(G, P, b.kr), enc(_rebuilt(G), P, b.kr)
        same += e1 == e2
        back = decode_columns(e1.packed_values(g), e1.tail_value, P, b.kr, b.alphabet, group=g)
        roundtrip += bool(back) and dump_grammar(back) == dump_grammar(G)
        others = [H for H in gy if H != G]
        if others:
            H = others[rng.randrange(len(others))]
            for key in keys:
                pairs += 1
                differ += enc(G, P, key).hamming(enc(H, P, key)) == P.M
    n = sz.encoding_grammars
    need = math.ceil(0.99 * pairs)
    passed = same == n and roundtrip == n and differ >= need
    return CriterionResult(
        "C9", "encodings separate grammars and decode back", passed,
        f"equal {_ratio(same, n)}, round trip {_ratio(roundtrip, n)}, "
        f"unequal differ everywhere {_ratio(differ, pairs)}",
        f"100%, 100%, >= {need}/{pairs}", time.perf_counter() - t0,
    )


CHECKS: dict[str, Callable[[Sizes, int], CriterionResult]] = {
    "C1": check_decomposition,
    "C2": check_compression,
    "C3": check_locality,
    "C3s": check_locality_stress,
    "C4": check_static,
    "C5": check_hamming,
    "C6": check_update,
    "C7": check_suffix,
    "C8": check_rolling,
    "C8s": check_rolling_stress,
    "C9": check_encoding,
}


def run_all(
    trials: int | None = None,
    n: int | None = None,
    k: int | None = None,
    seed: int = 0,
    only: Sequence[str] | None = None,
    sizes: Sizes | None = None,
    progress: Callable[[CriterionResult], None] | None = None,
) -> list[CriterionResult]:
    """Run the checks; ``trials``/``n``/``k`` shrink the full-size defaults."""
    if sizes is None:
        sizes = Sizes() if trials is None and n is None and k is None else Sizes.reduced(trials or 10**9, n, k)
    out = []
    for index, (key, fn) in enumerate(CHECKS.items()):
        if only is not None and key not in only:
            continue
        r = fn(sizes, seed * 1000 + index)
        out.append(r)
        if progress is not None:
            progress(r)
    return out

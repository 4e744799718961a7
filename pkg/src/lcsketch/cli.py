"""Command-line driver.

    lcsketch genkeys --n 2048 --k 6 --seed 1 -o keys.bin
    lcsketch decompose --keys keys.bin input.txt -o grammars.txt
    lcsketch sketch --keys keys.bin input.txt --copies 9 -o x.lcs
    lcsketch compare x.lcs y.lcs
    lcsketch roll --keys keys.bin script.txt --copies 5
    lcsketch selftest --trials 20

All randomness comes from the bundle file, so runs are reproducible and two
machines holding the same bundle produce comparable sketches.  ``compare``
exits 0 when the distance is at most k, 1 when it is reported as infinite
and 2 on errors (unreadable files, sketches from different bundles).
"""

from __future__ import annotations

import argparse
import json
import shlex
import struct
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .core import ParamError, derive_params
from .decomposition import DecompositionError, decompose
from .ed_sketch import EdSketch, ed_compare, ed_sketch, majority
from .grammar_ops import INF, dump_grammar
from .hamming_sketch import IncomparableSketches
from .hashing import (
    IntReader,
    RandomnessBundle,
    bundle_generate,
    copy_bundles,
    read_header,
    write_header,
)
from .rolling_sketch import AmplifiedRolling

SKETCH_SET_MAGIC = b"LCSS"
EXIT_MATCH, EXIT_FAR, EXIT_ERROR = 0, 1, 2


class CliError(Exception):
    pass


def _fmt(d: float) -> str:
    return "INF" if d == INF else str(int(d))


def _json_value(d: float):
    return None if d == INF else int(d)


def read_symbols(path: str, u32: bool = False) -> list[int]:
    """Input string: raw bytes, or a u32 count followed by u32 symbols (little-endian)."""
    data = sys.stdin.buffer.read() if path == "-" else Path(path).read_bytes()
    if not u32:
        return list(data)
    if len(data) < 4:
        raise CliError("u32 input needs a length prefix")
    (count,) = struct.unpack_from("<I", data, 0)
    if len(data) != 4 + 4 * count:
        raise CliError(f"u32 input declares {count} symbols but holds {(len(data) - 4) // 4}")
    return list(struct.unpack_from(f"<{count}I", data, 4))


def load_bundle(path: str) -> RandomnessBundle:
    try:
        return RandomnessBundle.from_bytes(Path(path).read_bytes())
    except (OSError, ValueError) as exc:
        raise CliError(f"cannot read bundle {path}: {exc}") from exc


# ---------------------------------------------------------------------------
# sketch files: a set of copies, each stored with the bundle that made it


def write_sketch_set(sketches: Sequence[EdSketch], bundles: Sequence[RandomnessBundle]) -> bytes:
    w = write_header(SKETCH_SET_MAGIC, bundles[0])
    w.ints([len(sketches)])
    for sk, b in zip(sketches, bundles):
        w.raw(b.to_bytes())
        w.raw(sk.to_bytes(b))
    return w.getvalue()


def read_sketch_set(data: bytes) -> tuple[list[EdSketch], list[RandomnessBundle]]:
    _digest, _echo, r = read_header(data, SKETCH_SET_MAGIC)
    (count,) = r.ints(1)
    sketches, bundles = [], []
    for _ in range(count):
        b = RandomnessBundle.from_bytes(r.raw())
        sketches.append(EdSketch.from_bytes(r.raw(), b))
        bundles.append(b)
    return sketches, bundles


# ---------------------------------------------------------------------------
# commands


def cmd_genkeys(args) -> int:
    try:
        P = derive_params(args.n, args.k, sigma_size=args.sigma, profile=args.profile)
    except ParamError as exc:
        raise CliError(str(exc)) from exc
    bundle = bundle_generate(P, args.seed)
    Path(args.out).write_bytes(bundle.to_bytes())
    info = {"n": P.n, "k": P.k, "L": P.L, "R": P.R, "D": P.D, "S": P.S, "M": P.M, "T": P.T,
            "digest": f"{bundle.digest:016x}", "out": args.out}
    if args.format == "json":
        print(json.dumps(info))
    else:
        print(f"wrote bundle {info['digest']} (n={P.n}, k={P.k}, L={P.L}, D={P.D}, T={P.T}) to {args.out}")
    return 0


def cmd_decompose(args) -> int:
    bundle = load_bundle(args.keys)
    x = read_symbols(args.input, args.u32)
    try:
        grammars = decompose(x, bundle)
    except DecompositionError as exc:
        msg = f"decomposition failed: {type(exc).__name__}: {exc}"
        if args.format == "json":
            print(json.dumps({"ok": False, "error": msg}))
        else:
            print(msg, file=sys.stderr)
        return EXIT_FAR
    lines = [dump_grammar(G) for G in grammars]
    text = "".join(line + "\n" for line in lines)
    if args.out:
        Path(args.out).write_text(text)
    if args.format == "json":
        print(json.dumps({"ok": True, "count": len(lines), "grammars": None if args.out else lines}))
    elif not args.out:
        sys.stdout.write(text)
    else:
        print(f"{len(lines)} grammars written to {args.out}")
    return 0


def cmd_sketch(args) -> int:
    bundles = copy_bundles(load_bundle(args.keys), args.copies)
    x = read_symbols(args.input, args.u32)
    if len(x) > bundles[0].params.n:
        raise CliError(f"input has {len(x)} symbols, more than n={bundles[0].params.n}")
    sketches = [ed_sketch(x, b) for b in bundles]
    Path(args.out).write_bytes(write_sketch_set(sketches, bundles))
    failed = sum(1 for s in sketches if s.failure)
    if args.format == "json":
        print(json.dumps({"copies": len(sketches), "grammars": sketches[0].count, "failed_copies": failed, "out": args.out}))
    else:
        print(f"{len(sketches)} copies, {sketches[0].count} grammars, {failed} failed, written to {args.out}")
    return 0


def cmd_compare(args) -> int:
    try:
        xs, bx = read_sketch_set(Path(args.a).read_bytes())
        ys, by = read_sketch_set(Path(args.b).read_bytes())
    except (OSError, ValueError) as exc:
        raise CliError(f"cannot read sketch: {exc}") from exc
    if len(xs) != len(ys) or any(a.digest != b.digest for a, b in zip(bx, by)):
        raise CliError("sketches were built with different bundles")
    try:
        d = majority([ed_compare(a, b, bd) for a, b, bd in zip(xs, ys, bx)])
    except IncomparableSketches as exc:
        raise CliError(str(exc)) from exc
    if args.format == "json":
        print(json.dumps({"distance": _json_value(d), "copies": len(xs)}))
    else:
        print(_fmt(d))
    return EXIT_MATCH if d != INF else EXIT_FAR


@dataclass(frozen=True)
class ScriptOp:
    line: int
    op: str
    args: tuple


def _parse_symbols(token: str, line: int) -> list[int]:
    if len(token) >= 2 and token[0] == token[-1] and token[0] in "'\"":
        body = token[1:-1].encode()
        if not body:
            raise CliError(f"line {line}: empty quoted string")
        return list(body)
    try:
        v = int(token)
    except ValueError:
        raise CliError(f"line {line}: expected a byte value or a quoted string, got {token!r}") from None
    if not 0 <= v <= 255:
        raise CliError(f"line {line}: byte value {v} outside 0..255")
    return [v]


def parse_script(text: str) -> list[ScriptOp]:
    """``A <byte>``, ``R <byte>``, ``SNAP <name>``, ``CMP <name1> <name2>``; '#' starts a comment.

    ``<byte>`` is a decimal value or a quoted string (one op per character).
    """
    ops: list[ScriptOp] = []
    for no, raw in enumerate(text.splitlines(), start=1):
        try:
            tokens = shlex.split(raw, comments=True, posix=False)
        except ValueError as exc:
            raise CliError(f"line {no}: {exc}") from None
        if not tokens:
            continue
        op, rest = tokens[0].upper(), tokens[1:]
        if op in ("A", "R"):
            if len(rest) != 1:
                raise CliError(f"line {no}: {op} takes one argument")
            ops.append(ScriptOp(no, op, tuple(_parse_symbols(rest[0], no))))
        elif op == "SNAP":
            if len(rest) != 1:
                raise CliError(f"line {no}: SNAP takes one name")
            ops.append(ScriptOp(no, op, (rest[0],)))
        elif op == "CMP":
            if len(rest) != 2:
                raise CliError(f"line {no}: CMP takes two names")
            ops.append(ScriptOp(no, op, (rest[0], rest[1])))
        else:
            raise CliError(f"line {no}: unknown op {tokens[0]!r}")
    return ops


def run_script(ops: Sequence[ScriptOp], bundles: Sequence[RandomnessBundle]) -> list[tuple[int, str, str, float]]:
    # debug mode keeps the live window so a wrong R line is reported
    sk = AmplifiedRolling.new(bundles, debug=True)
    snaps: dict[str, AmplifiedRolling] = {}
    out = []
    for op in ops:
        try:
            if op.op == "A":
                for a in op.args:
                    sk.append(a)
            elif op.op == "R":
                for a in op.args:
                    sk.remove(a)
            elif op.op == "SNAP":
                snaps[op.args[0]] = sk.snapshot()
            else:
                a, b = op.args
                missing = [nm for nm in (a, b) if nm not in snaps]
                if missing:
                    raise CliError(f"line {op.line}: no snapshot named {missing[0]!r}")
                out.append((op.line, a, b, snaps[a].compare(snaps[b])))
        except ValueError as exc:
            raise CliError(f"line {op.line}: {exc}") from exc
    return out


def cmd_roll(args) -> int:
    bundles = copy_bundles(load_bundle(args.keys), args.copies)
    try:
        text = Path(args.script).read_text()
    except OSError as exc:
        raise CliError(f"cannot read script: {exc}") from exc
    results = run_script(parse_script(text), bundles)
    if args.format == "json":
        print(json.dumps([{"line": ln, "a": a, "b": b, "distance": _json_value(d)} for ln, a, b, d in results]))
    else:
        for _ln, a, b, d in results:
            print(f"CMP {a} {b} {_fmt(d)}")
    return 0


def cmd_selftest(args) -> int:
    from .acceptance import run_all

    results = run_all(trials=args.trials, n=args.n, k=args.k, seed=args.seed)
    if args.format == "json":
        print(json.dumps([r.as_dict() for r in results]))
    else:
        for r in results:
            print(r.line())
    return 0 if all(r.passed for r in results) else EXIT_FAR


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lcsketch", description=__doc__.split("\n\n")[0])
    ap.add_argument("--format", choices=["text", "json"], default="text", help="output format")
    # --format is also accepted after the command; SUPPRESS keeps the top-level value otherwise
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=["text", "json"], default=argparse.SUPPRESS, help="output format")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("genkeys", help="draw a randomness bundle", parents=[common])
    p.add_argument("--n", type=int, required=True, help="maximum string length")
    p.add_argument("--k", type=int, required=True, help="edit distance threshold")
    p.add_argument("--sigma", type=int, default=256, help="input alphabet size")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--profile", choices=["desk", "paper"], default="desk")
    p.add_argument("-o", "--out", required=True)
    p.set_defaults(func=cmd_genkeys)

    for name, func, helptext in (
        ("decompose", cmd_decompose, "print the grammar decomposition of a file"),
        ("sketch", cmd_sketch, "write an edit-distance sketch of a file"),
    ):
        p = sub.add_parser(name, help=helptext, parents=[common])
        p.add_argument("--keys", required=True, help="bundle file")
        p.add_argument("input", help="input file ('-' for stdin)")
        p.add_argument("--u32", action="store_true", help="input is a u32 count followed by u32 symbols")
        p.add_argument("-o", "--out", required=name == "sketch")
        if name == "sketch":
            p.add_argument("--copies", type=int, default=1, help="independent copies for majority voting")
        p.set_defaults(func=func)

    p = sub.add_parser("compare", help="compare two sketch files", parents=[common])
    p.add_argument("a")
    p.add_argument("b")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("roll", help="replay a rolling-sketch op script", parents=[common])
    p.add_argument("--keys", required=True)
    p.add_argument("script")
    p.add_argument("--copies", type=int, default=5)
    p.set_defaults(func=cmd_roll)

    p = sub.add_parser("selftest", help="run the acceptance checks at reduced size", parents=[common])
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--n", type=int, default=512, help="string length bound")
    p.add_argument("--k", type=int, default=4)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_selftest)
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        if args.format == "json":
            print(json.dumps({"error": str(exc)}))
        else:
            print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())

"""Mismatch-recovering Hamming sketches over a prime field.

A string ``x`` living at absolute positions ``offset .. offset+length-1`` is
summarized by power sums

    A_j = sum_i x_i * w^(i*j)        j = 1 .. 2k'
    Q_j = sum_i x_i^2 * w^(i*j)      j = 1 .. k'
    VA  = sum_i x_i * rho^i,   VQ = sum_i x_i^2 * rho^i

All of them are linear in ``x``, so appending, removing the front symbol and
re-indexing are O(k') updates.  The difference of two sketches is the sketch
of ``x - y``: Berlekamp-Massey finds the error locator, a Chien search over
the live positions finds the mismatches, Forney's formula gives ``e = x - y``
and, on the squared channel, ``f = x^2 - y^2``; then ``x = (f/e + e)/2`` and
``y = (f/e - e)/2``.  The two single-point fingerprints reject wrong decodes.

:class:`BlockHamSketch` applies the same machinery column-wise to strings of
equal-length blocks that differ either everywhere or nowhere (grammar
encodings).  It locates differing blocks and returns their full contents.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import MERSENNE61
from .hashing import IntReader, IntWriter

CHUNK = 1024
_LIMB = 21
_LIMB_MASK = (1 << _LIMB) - 1


class IncomparableSketches(ValueError):
    """Sketches built from different randomness, capacity or field."""


# ---------------------------------------------------------------------------
# field arithmetic


class Field:
    """Vectorized arithmetic modulo p; fast uint64 path for p = 2^61 - 1."""

    def __init__(self, p: int) -> None:
        self.p = p
        self.fast = p == MERSENNE61
        self.dtype = np.uint64 if self.fast else object
        self._pow_cache: dict[tuple, np.ndarray] = {}

    def array(self, values) -> np.ndarray:
        if self.fast and isinstance(values, np.ndarray) and values.dtype.kind in "iu":
            return values.astype(np.uint64) % np.uint64(self.p)
        return np.asarray([int(v) % self.p for v in values], dtype=self.dtype)

    def zeros(self, shape) -> np.ndarray:
        if self.fast:
            return np.zeros(shape, dtype=np.uint64)
        out = np.empty(shape, dtype=object)
        out.fill(0)
        return out

    def mul(self, a: np.ndarray, b) -> np.ndarray:
        if not self.fast:
            return (np.asarray(a, dtype=object) * b) % self.p
        a = np.asarray(a, dtype=np.uint64)
        b = np.asarray(b, dtype=np.uint64)
        m31 = np.uint64((1 << 31) - 1)
        m30 = np.uint64((1 << 30) - 1)
        s31, s30, s61 = np.uint64(31), np.uint64(30), np.uint64(61)
        a0, a1 = a & m31, a >> s31
        b0, b1 = b & m31, b >> s31
        mid = a1 * b0 + a0 * b1
        r = (a1 * b1) * np.uint64(2) + (mid >> s30) + ((mid & m30) << s31) + a0 * b0
        return self._reduce(r)

    def _reduce(self, r: np.ndarray) -> np.ndarray:
        p = np.uint64(self.p)
        s61 = np.uint64(61)
        r = (r & p) + (r >> s61)
        r = (r & p) + (r >> s61)
        return np.where(r >= p, r - p, r)

    def add(self, a, b) -> np.ndarray:
        if not self.fast:
            return (np.asarray(a, dtype=object) + b) % self.p
        return self._reduce(np.asarray(a, dtype=np.uint64) + np.asarray(b, dtype=np.uint64))

    def sub(self, a, b) -> np.ndarray:
        if not self.fast:
            return (np.asarray(a, dtype=object) - b) % self.p
        p = np.uint64(self.p)
        return self._reduce(np.asarray(a, dtype=np.uint64) + (p - np.asarray(b, dtype=np.uint64)))

    def neg(self, a) -> np.ndarray:
        return self.sub(self.zeros(np.shape(a)), a)

    def matmul(self, U: np.ndarray, V: np.ndarray) -> np.ndarray:
        """(U @ V) mod p, exact."""
        if not self.fast:
            return (np.asarray(U, dtype=object) @ np.asarray(V, dtype=object)) % self.p
        U = np.asarray(U, dtype=np.uint64)
        V = np.asarray(V, dtype=np.uint64)
        inner = U.shape[1]
        total = self.zeros((U.shape[0], V.shape[1]))
        if inner == 0:
            return total
        step = 2048
        for s in range(0, inner, step):
            Us = U[:, s:s + step]
            Vs = V[s:s + step, :]
            ul = [((Us >> np.uint64(_LIMB * t)) & np.uint64(_LIMB_MASK)).astype(np.float64) for t in range(3)]
            vl = [((Vs >> np.uint64(_LIMB * t)) & np.uint64(_LIMB_MASK)).astype(np.float64) for t in range(3)]
            for sh in range(5):
                acc = None
                for a in range(3):
                    b = sh - a
                    if 0 <= b < 3:
                        part = (ul[a] @ vl[b]).astype(np.uint64)
                        acc = part if acc is None else acc + part
                acc = self._reduce(acc)
                total = self.add(total, self.mul(acc, np.uint64(pow(2, _LIMB * sh, self.p))))
        return total

    def sum(self, a: np.ndarray, axis=None):
        """Sum modulo p along an axis (as Python ints when axis is None)."""
        if axis is None:
            return sum(int(v) for v in np.ravel(a)) % self.p
        if not self.fast:
            return np.sum(a, axis=axis) % self.p
        # partial sums of at most 4 terms fit in uint64 before reduction
        a = np.moveaxis(np.asarray(a, dtype=np.uint64), axis, 0)
        acc = self.zeros(a.shape[1:])
        for row in a:
            acc = self.add(acc, row)
        return acc

    def powers(self, base: int, count: int) -> np.ndarray:
        """[base^0, base^1, ..., base^(count-1)]."""
        out = []
        v = 1
        for _ in range(count):
            out.append(v)
            v = v * base % self.p
        return self.array(out)

    def power_table(self, bases: Sequence[int], rows: int) -> np.ndarray:
        """T[c, j] = bases[j]^c for c < rows, cached."""
        key = (tuple(bases), rows)
        t = self._pow_cache.get(key)
        if t is None:
            t = self.zeros((rows, len(bases)))
            t[0] = self.array([1] * len(bases))
            filled = 1
            while filled < rows:
                # rows filled..2*filled-1 are rows 0..filled-1 times bases^filled
                step = self.array([pow(int(b), filled, self.p) for b in bases])
                m = min(filled, rows - filled)
                t[filled:filled + m] = self.mul(t[:m], step[None, :])
                filled += m
            if len(self._pow_cache) > 32:
                self._pow_cache.clear()
            self._pow_cache[key] = t
        return t

    def power_sums(self, values: np.ndarray, start: int, bases: Sequence[int]) -> list[int]:
        """S_j = sum_i values[i] * bases[j]^(start+i) for every j."""
        p = self.p
        n = len(values)
        J = len(bases)
        if n == 0 or J == 0:
            return [0] * J
        chunks = (n + CHUNK - 1) // CHUNK
        V = self.zeros((chunks, CHUNK))
        V.reshape(-1)[:n] = self.array(values) if not isinstance(values, np.ndarray) or values.dtype != self.dtype else values
        table = self.power_table(bases, CHUNK)
        R = self.matmul(V, table)
        step = self.array([pow(b, CHUNK, p) for b in bases])
        cur = self.array([pow(b, start, p) for b in bases])
        out = self.zeros(J)
        for t in range(chunks):
            out = self.add(out, self.mul(R[t], cur))
            cur = self.mul(cur, step)
        return [int(v) for v in out]


_fields: dict[int, Field] = {}


def get_field(p: int) -> Field:
    f = _fields.get(p)
    if f is None:
        f = _fields[p] = Field(p)
    return f


# ---------------------------------------------------------------------------
# decoding primitives (scalar, Python ints)


def berlekamp_massey(S: Sequence[int], p: int) -> list[int]:
    """Shortest LFSR: Lambda with Lambda[0] = 1 and sum_d Lambda[d] S[n-d] = 0."""
    C = [1]
    B = [1]
    L = 0
    m = 1
    b = 1
    for n in range(len(S)):
        d = S[n]
        for i in range(1, L + 1):
            d = (d + C[i] * S[n - i]) % p
        if d == 0:
            m += 1
            continue
        coef = d * pow(b, -1, p) % p
        T = C[:]
        if len(C) < len(B) + m:
            C = C + [0] * (len(B) + m - len(C))
        for i, bi in enumerate(B):
            C[i + m] = (C[i + m] - coef * bi) % p
        if 2 * L <= n:
            L = n + 1 - L
            B = T
            b = d
            m = 1
        else:
            m += 1
    C = C[: L + 1] + [0] * max(0, L + 1 - len(C))
    return C


def poly_eval(coeffs: Sequence[int], z: int, p: int) -> int:
    acc = 0
    for c in reversed(coeffs):
        acc = (acc * z + c) % p
    return acc


def chien_search(F: Field, lam: Sequence[int], omega: int, start: int, length: int) -> list[int]:
    """Positions i in [start, start+length) with Lambda(omega^-i) = 0."""
    p = F.p
    t = len(lam) - 1
    if length <= 0:
        return []
    if t == 0:
        return []
    inv = pow(omega, -1, p)
    chunks = (length + CHUNK - 1) // CHUNK
    # U[r, d] = lam_d * omega^(-d*(start + r*CHUNK)), V[d, c] = omega^(-d*c)
    first = [lam[d] * pow(inv, d * start, p) % p for d in range(t + 1)]
    step = F.array([pow(inv, d * CHUNK, p) for d in range(t + 1)])
    U = F.zeros((chunks, t + 1))
    cur = F.array(first)
    for r in range(chunks):
        U[r] = cur
        cur = F.mul(cur, step)
    V = F.power_table([pow(inv, d, p) for d in range(t + 1)], CHUNK).T
    vals = F.matmul(U, V).reshape(-1)[:length]
    return [start + int(i) for i in np.nonzero(vals == 0)[0]]


def forney_numerators(S: Sequence[int], lam: Sequence[int], p: int) -> list[int]:
    """Coefficients of Omega = S(z)*Lambda(z) mod z^t with S(z) = sum_j S_j z^(j-1)."""
    t = len(lam) - 1
    return [sum(lam[d] * S[m - d] for d in range(m + 1)) % p for m in range(t)]


@dataclass(frozen=True)
class Mismatch:
    index: int  # 0-based position in the live string
    x: int
    y: int


class _Infinite:
    """Marker for 'more mismatches than the capacity, or decode failed'."""

    def __repr__(self) -> str:
        return "INF"

    def __bool__(self) -> bool:
        return False


INFINITE = _Infinite()


def _locate(F: Field, S: Sequence[int], kcap: int, omega: int, offset: int, length: int):
    p = F.p
    lam = berlekamp_massey(list(S), p)
    t = len(lam) - 1
    if t > kcap or lam[-1] == 0:
        return None
    roots = chien_search(F, lam, omega, offset, length)
    if len(roots) != t:
        return None
    return lam, roots


def _forney_values(S: Sequence[int], lam: Sequence[int], roots: Sequence[int], omega: int, p: int) -> list[int]:
    t = len(lam) - 1
    om = forney_numerators(S, lam, p)
    dlam = [(d * lam[d]) % p for d in range(1, t + 1)]
    out = []
    for i in roots:
        xinv = pow(omega, -i, p)
        den = poly_eval(dlam, xinv, p)
        if den == 0:
            return []
        out.append((-poly_eval(om, xinv, p)) * pow(den, -1, p) % p)
    return out


# ---------------------------------------------------------------------------
# symbol-level sketch


@dataclass
class HamSketch:
    p: int
    kcap: int
    omega: int
    rho: int
    rid: int
    offset: int = 0
    length: int = 0
    A: list[int] = field(default_factory=list)
    Q: list[int] = field(default_factory=list)
    VA: int = 0
    VQ: int = 0
    max_length: int | None = None

    def __post_init__(self) -> None:
        if self.kcap < 1:
            raise ValueError("capacity must be at least 1")
        if not self.A:
            self.A = [0] * (2 * self.kcap)
        if not self.Q:
            self.Q = [0] * self.kcap

    @property
    def size(self) -> int:
        """Number of field elements in the payload."""
        return len(self.A) + len(self.Q) + 2

    def copy(self) -> "HamSketch":
        return copy.deepcopy(self)

    def _add(self, v: int, pos: int, sign: int) -> None:
        p = self.p
        v %= p
        v2 = v * v % p
        if sign < 0:
            v, v2 = p - v if v else 0, p - v2 if v2 else 0
        base = pow(self.omega, pos, p)
        w = base
        A, Q = self.A, self.Q
        for j in range(len(A)):
            A[j] = (A[j] + v * w) % p
            if j < len(Q):
                Q[j] = (Q[j] + v2 * w) % p
            w = w * base % p
        r = pow(self.rho, pos, p)
        self.VA = (self.VA + v * r) % p
        self.VQ = (self.VQ + v2 * r) % p

    def payload(self) -> list[int]:
        return list(self.A) + list(self.Q) + [self.VA, self.VQ]


def ham_new(params, kcap: int, bundle, max_length: int | None = None) -> HamSketch:
    return HamSketch(
        p=params.p, kcap=kcap, omega=bundle.ham_omega, rho=bundle.ham_rho, rid=bundle.digest,
        max_length=max_length,
    )


def ham_append(sk: HamSketch, v: int) -> None:
    if sk.max_length is not None and sk.length >= sk.max_length:
        raise OverflowError("sketch length limit reached")
    sk._add(v, sk.offset + sk.length, +1)
    sk.length += 1


def ham_remove_front(sk: HamSketch, v: int) -> None:
    if sk.length == 0:
        raise IndexError("remove from an empty sketch")
    sk._add(v, sk.offset, -1)
    sk.offset += 1
    sk.length -= 1


def ham_of_known(x: Sequence[int], offset: int, params, kcap: int, bundle) -> HamSketch:
    sk = ham_new(params, kcap, bundle)
    sk.offset = offset
    _fill(sk, x)
    return sk


def _fill(sk: HamSketch, x: Sequence[int]) -> None:
    F = get_field(sk.p)
    p = sk.p
    if len(x) == 0:
        return
    vals = F.array(x)
    sq = F.mul(vals, vals)
    K = sk.kcap
    wb = [pow(sk.omega, j, p) for j in range(1, 2 * K + 1)]
    a = F.power_sums(vals, sk.offset, wb + [sk.rho])
    q = F.power_sums(sq, sk.offset, wb[:K] + [sk.rho])
    sk.A = [(u + v) % p for u, v in zip(sk.A, a[:-1])]
    sk.Q = [(u + v) % p for u, v in zip(sk.Q, q[:-1])]
    sk.VA = (sk.VA + a[-1]) % p
    sk.VQ = (sk.VQ + q[-1]) % p
    sk.length += len(x)


def ham_shift(sk: HamSketch, delta: int) -> HamSketch:
    """Same string re-indexed to start at offset + delta."""
    p = sk.p
    out = sk.copy()
    base = pow(sk.omega, delta, p)
    w = base
    for j in range(len(out.A)):
        out.A[j] = out.A[j] * w % p
        if j < len(out.Q):
            out.Q[j] = out.Q[j] * w % p
        w = w * base % p
    r = pow(sk.rho, delta, p)
    out.VA = out.VA * r % p
    out.VQ = out.VQ * r % p
    out.offset += delta
    return out


def _check_comparable(a, b) -> None:
    if a.rid != b.rid or a.p != b.p or a.kcap != b.kcap or a.omega != b.omega:
        raise IncomparableSketches("sketches use different randomness or capacity")


def ham_compare(skx: HamSketch, sky: HamSketch):
    """Exact mismatch list if there are at most k' mismatches, else INFINITE."""
    _check_comparable(skx, sky)
    if skx.offset != sky.offset or skx.length != sky.length:
        return INFINITE
    p = skx.p
    F = get_field(p)
    dA = [(a - b) % p for a, b in zip(skx.A, sky.A)]
    dQ = [(a - b) % p for a, b in zip(skx.Q, sky.Q)]
    dVA = (skx.VA - sky.VA) % p
    dVQ = (skx.VQ - sky.VQ) % p
    if not any(dA) and not any(dQ) and dVA == 0 and dVQ == 0:
        return []
    found = _locate(F, dA, skx.kcap, skx.omega, skx.offset, skx.length)
    if found is None:
        return INFINITE
    lam, roots = found
    e = _forney_values(dA, lam, roots, skx.omega, p)
    f = _forney_values(dQ, lam, roots, skx.omega, p)
    if len(e) != len(roots) or len(f) != len(roots) or any(v == 0 for v in e):
        return INFINITE
    if sum(ei * pow(skx.rho, i, p) for ei, i in zip(e, roots)) % p != dVA:
        return INFINITE
    if sum(fi * pow(skx.rho, i, p) for fi, i in zip(f, roots)) % p != dVQ:
        return INFINITE
    inv2 = pow(2, -1, p)
    out = []
    for i, ei, fi in zip(roots, e, f):
        s = fi * pow(ei, -1, p) % p
        out.append(Mismatch(i - skx.offset, (s + ei) * inv2 % p, (s - ei) * inv2 % p))
    return out


def _write_array(w: IntWriter, a: np.ndarray) -> None:
    w.ints([a.ndim, *a.shape])
    if a.dtype == np.uint64:
        w.ints([1])
        w.raw(a.astype("<u8").tobytes())
    else:
        w.ints([0])
        w.ints([int(v) for v in a.reshape(-1)])


def _read_array(r: IntReader, F: Field) -> np.ndarray:
    (ndim,) = r.ints(1)
    shape = tuple(r.ints(ndim))
    (packed,) = r.ints(1)
    if packed:
        a = np.frombuffer(r.raw(), dtype="<u8").astype(np.uint64).reshape(shape)
        return a if F.fast else F.array(a.reshape(-1).tolist()).reshape(shape)
    count = int(np.prod(shape)) if shape else 1
    return F.array(r.ints(count)).reshape(shape)


def ham_write(sk: HamSketch, w: IntWriter) -> None:
    w.ints([sk.p, sk.kcap, sk.omega, sk.rho, sk.rid, sk.offset, sk.length])
    w.ints(sk.payload())


def ham_read(r: IntReader) -> HamSketch:
    p, kcap, omega, rho, rid, offset, length = r.ints(7)
    vals = r.ints(3 * kcap + 2)
    return HamSketch(
        p=p, kcap=kcap, omega=omega, rho=rho, rid=rid, offset=offset, length=length,
        A=vals[: 2 * kcap], Q=vals[2 * kcap: 3 * kcap], VA=vals[-2], VQ=vals[-1],
    )


# ---------------------------------------------------------------------------
# block-level sketch


@dataclass(frozen=True)
class BlockMismatch:
    index: int  # 0-based block position in the live sequence
    x_cols: np.ndarray
    x_tail: int
    y_cols: np.ndarray
    y_tail: int


@dataclass
class BlockHamSketch:
    """Column-wise sketch of a sequence of blocks, each ``ncols_total`` symbols long.

    Row c < ncols of the matrices holds column c; the last row holds the
    common value of all remaining columns (the padding tail).  Rows are added
    lazily as longer blocks arrive.
    """

    p: int
    kcap: int
    omega: int
    rho: int
    gamma: int
    rid: int
    ncols_total: int
    offset: int = 0
    length: int = 0
    A: np.ndarray | None = None
    Q: np.ndarray | None = None
    VA: np.ndarray | None = None
    VQ: np.ndarray | None = None

    @property
    def F(self) -> Field:
        return get_field(self.p)

    @property
    def ncols(self) -> int:
        return 0 if self.A is None else self.A.shape[0] - 1

    @property
    def size(self) -> int:
        if self.A is None:
            return 0
        return self.A.size + self.Q.size + self.VA.size + self.VQ.size

    def copy(self) -> "BlockHamSketch":
        out = copy.copy(self)
        for name in ("A", "Q", "VA", "VQ"):
            v = getattr(self, name)
            setattr(out, name, None if v is None else v.copy())
        return out

    def _ensure(self, ncols: int) -> None:
        F = self.F
        K = self.kcap
        if self.A is None:
            self.A = F.zeros((ncols + 1, 2 * K))
            self.Q = F.zeros((ncols + 1, K))
            self.VA = F.zeros(ncols + 1)
            self.VQ = F.zeros(ncols + 1)
            return
        have = self.ncols
        if ncols <= have:
            return
        extra = ncols - have

        def grow(m: np.ndarray) -> np.ndarray:
            tail = m[-1:]
            return np.concatenate([m[:-1], np.repeat(tail, extra + 1, axis=0)], axis=0)

        self.A = grow(self.A)
        self.Q = grow(self.Q)
        self.VA = grow(self.VA[:, None])[:, 0]
        self.VQ = grow(self.VQ[:, None])[:, 0]

    def _apply(self, cols: np.ndarray, tail: int, pos: int, sign: int) -> None:
        F = self.F
        p = self.p
        self._ensure(len(cols))
        n = self.ncols
        v = F.zeros(n + 1)
        v[: len(cols)] = F.array(cols)
        v[len(cols):] = tail % p
        v2 = F.mul(v, v)
        if sign < 0:
            v, v2 = F.neg(v), F.neg(v2)
        K = self.kcap
        base = pow(self.omega, pos, p)
        pw = F.array(_powers(base, 1, 2 * K, p))
        self.A = F.add(self.A, F.mul(v[:, None], pw[None, :]))
        self.Q = F.add(self.Q, F.mul(v2[:, None], pw[None, :K]))
        r = np.asarray(pow(self.rho, pos, p), dtype=F.dtype)
        self.VA = F.add(self.VA, F.mul(v, r))
        self.VQ = F.add(self.VQ, F.mul(v2, r))

    def add_block_at(self, cols: np.ndarray, tail: int, pos: int, sign: int = 1) -> None:
        """Add (sign=+1) or subtract (sign=-1) a block at absolute position ``pos``.

        Offset and length are left alone; callers that place blocks by
        absolute position keep their own range bookkeeping.
        """
        self._apply(cols, tail, pos, sign)

    def append_block(self, cols: np.ndarray, tail: int) -> None:
        self._apply(cols, tail, self.offset + self.length, +1)
        self.length += 1

    def remove_front_block(self, cols: np.ndarray, tail: int) -> None:
        if self.length == 0:
            raise IndexError("remove from an empty sketch")
        self._apply(cols, tail, self.offset, -1)
        self.offset += 1
        self.length -= 1

    def add_constant_blocks(self, value: int, start: int, count: int) -> None:
        """Add ``count`` blocks whose every symbol is ``value`` at positions start.. (no length change)."""
        if count <= 0:
            return
        F = self.F
        p = self.p
        K = self.kcap
        self._ensure(0)
        geo = []
        for j in range(1, 2 * K + 1):
            geo.append(_geometric(pow(self.omega, j, p), start, start + count, p))
        rg = _geometric(self.rho, start, start + count, p)
        v = value % p
        v2 = v * v % p
        ga = F.array([g * v % p for g in geo])
        gq = F.array([g * v2 % p for g in geo[:K]])
        self.A = F.add(self.A, ga[None, :])
        self.Q = F.add(self.Q, gq[None, :])
        self.VA = F.add(self.VA, np.asarray(rg * v % p, dtype=F.dtype))
        self.VQ = F.add(self.VQ, np.asarray(rg * v2 % p, dtype=F.dtype))

    def shifted(self, delta: int) -> "BlockHamSketch":
        out = self.copy()
        out.offset += delta
        if out.A is None or delta == 0:
            return out
        F = self.F
        p = self.p
        K = self.kcap
        base = pow(self.omega, delta, p)
        pw = F.array(_powers(base, 1, 2 * K, p))
        out.A = F.mul(out.A, pw[None, :])
        out.Q = F.mul(out.Q, pw[None, :K])
        r = np.asarray(pow(self.rho, delta, p), dtype=F.dtype)
        out.VA = F.mul(out.VA, r)
        out.VQ = F.mul(out.VQ, r)
        return out


def block_write(sk: BlockHamSketch, w: IntWriter) -> None:
    w.ints([sk.p, sk.kcap, sk.omega, sk.rho, sk.gamma, sk.rid, sk.ncols_total, sk.offset, sk.length])
    w.ints([0 if sk.A is None else 1])
    if sk.A is not None:
        for a in (sk.A, sk.Q, sk.VA, sk.VQ):
            _write_array(w, a)


def block_read(r: IntReader) -> BlockHamSketch:
    p, kcap, omega, rho, gamma, rid, ncols_total, offset, length = r.ints(9)
    sk = BlockHamSketch(p, kcap, omega, rho, gamma, rid, ncols_total, offset, length)
    (has,) = r.ints(1)
    if has:
        F = get_field(p)
        sk.A, sk.Q, sk.VA, sk.VQ = (_read_array(r, F) for _ in range(4))
    return sk


def _powers(z: int, first: int, count: int, p: int) -> list[int]:
    """[z^first, z^(first+1), ..., z^(first+count-1)] mod p."""
    out = []
    cur = pow(z, first, p)
    for _ in range(count):
        out.append(cur)
        cur = cur * z % p
    return out


def _batch_inverse(values: list[int], p: int) -> list[int]:
    """Inverses of nonzero values mod p with a single modular inversion."""
    prefix = []
    acc = 1
    for v in values:
        prefix.append(acc)
        acc = acc * v % p
    inv = pow(acc, -1, p)
    out = [0] * len(values)
    for i in range(len(values) - 1, -1, -1):
        out[i] = prefix[i] * inv % p
        inv = inv * values[i] % p
    return out


def _geometric(z: int, start: int, stop: int, p: int) -> int:
    count = stop - start
    if count <= 0:
        return 0
    if z % p == 1:
        return count % p
    return pow(z, start, p) * ((pow(z, count, p) - 1) % p) % p * pow(z - 1, -1, p) % p


def block_sketch_new(params, kcap: int, bundle, ncols_total: int) -> BlockHamSketch:
    return BlockHamSketch(
        p=params.p, kcap=kcap, omega=bundle.ham_omega, rho=bundle.ham_rho, gamma=bundle.ham_gamma,
        rid=bundle.digest, ncols_total=ncols_total,
    )


def block_compare(skx: BlockHamSketch, sky: BlockHamSketch, max_blocks: int | None = None):
    """Differing blocks with both contents, or INFINITE.

    Both sketches must cover the same positions.  ``max_blocks`` lowers the
    number of blocks the decoder is willing to report.
    """
    _check_comparable(skx, sky)
    if skx.offset != sky.offset or skx.length != sky.length:
        return INFINITE
    if skx.A is None and sky.A is None:
        return []
    x, y = skx.copy(), sky.copy()
    width = max(x.ncols, y.ncols)
    x._ensure(width)
    y._ensure(width)
    F = x.F
    p = x.p
    K = x.kcap
    dA = F.sub(x.A, y.A)
    dQ = F.sub(x.Q, y.Q)
    dVA = F.sub(x.VA, y.VA)
    dVQ = F.sub(x.VQ, y.VQ)
    if not dA.any() and not dQ.any() and not dVA.any() and not dVQ.any():
        return []
    rows = dA.shape[0]
    weights = F.array(_powers(x.gamma, 1, rows, p))
    combined = [int(v) for v in F.matmul(weights[None, :], dA)[0]]
    cap = K if max_blocks is None else min(K, max_blocks)
    found = _locate(F, combined, cap, x.omega, x.offset, x.length)
    if found is None:
        return INFINITE
    lam, roots = found
    t = len(roots)
    if t == 0:
        return INFINITE
    inv_roots = [pow(x.omega, -i, p) for i in roots]
    dlam = [(d * lam[d]) % p for d in range(1, t + 1)]
    den = [poly_eval(dlam, z, p) for z in inv_roots]
    if any(d == 0 for d in den):
        return INFINITE
    scale = F.array([(-pow(d, -1, p)) % p for d in den])
    # E[m, b] = (X_b^-1)^m for m < t
    E = F.array([pow(z, m, p) for m in range(t) for z in inv_roots]).reshape(t, t)

    def values(S: np.ndarray) -> np.ndarray:
        om = F.zeros((S.shape[0], t))
        for m in range(t):
            acc = F.zeros(S.shape[0])
            for d in range(m + 1):
                if lam[d]:
                    acc = F.add(acc, F.mul(S[:, m - d], np.asarray(lam[d], dtype=F.dtype)))
            om[:, m] = acc
        return F.mul(F.matmul(om, E), scale[None, :])

    if t > dQ.shape[1]:
        return INFINITE
    e = values(dA)
    f = values(dQ)
    if (e == 0).any():
        return INFINITE
    rvec = F.array([pow(x.rho, i, p) for i in roots])
    if not np.array_equal(F.matmul(e, rvec[:, None])[:, 0], dVA):
        return INFINITE
    if not np.array_equal(F.matmul(f, rvec[:, None])[:, 0], dVQ):
        return INFINITE
    out = []
    inv2 = pow(2, -1, p)
    for b, i in enumerate(roots):
        eb = [int(v) for v in e[:, b]]
        fb = [int(v) for v in f[:, b]]
        xs, ys = [], []
        for ev, fv, iv in zip(eb, fb, _batch_inverse(eb, p)):
            s = fv * iv % p
            xs.append((s + ev) * inv2 % p)
            ys.append((s - ev) * inv2 % p)
        out.append(
            BlockMismatch(
                index=i - x.offset,
                x_cols=np.asarray(xs[:-1], dtype=np.int64), x_tail=xs[-1],
                y_cols=np.asarray(ys[:-1], dtype=np.int64), y_tail=ys[-1],
            )
        )
    return out

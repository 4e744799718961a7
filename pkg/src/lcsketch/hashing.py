"""Pair-wise independent hashing, split predicates and Karp-Rabin fingerprints.

Every hash is ``h(u) = ((a*u + b) mod q) mod m`` with ``q`` a prime above the
domain size.  A pair of symbols ``(x, y)`` is packed into one integer as
``x * |Gamma| + y``.  All coefficients for one run live in a
:class:`RandomnessBundle`, which is generated from a 64-bit seed and can be
written to / read from a small binary file.
"""

from __future__ import annotations

import hashlib
import io
import random
import struct
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import sympy

from .core import MERSENNE61, Alphabet, Params

MAGIC = b"LCSB"
VERSION = 1

# Fixed public key used only for content digests of files.
DIGEST_Z = 0x1F3D5B79A2C4E6F1 % MERSENNE61


# ---------------------------------------------------------------------------
# bit strings and Karp-Rabin


@dataclass(frozen=True)
class Bits:
    """A bit string packed MSB-first into bytes (bit i is bit 7-(i%8) of byte i//8)."""

    data: bytes
    nbits: int

    def __post_init__(self) -> None:
        if len(self.data) != (self.nbits + 7) // 8:
            raise ValueError("byte length does not match nbits")

    @classmethod
    def from_iter(cls, bits: Iterable[int]) -> "Bits":
        out = bytearray()
        acc = 0
        n = 0
        for b in bits:
            acc = (acc << 1) | (1 if b else 0)
            n += 1
            if n % 8 == 0:
                out.append(acc)
                acc = 0
        if n % 8:
            out.append(acc << (8 - n % 8))
        return cls(bytes(out), n)

    @classmethod
    def from_str(cls, s: str) -> "Bits":
        return cls.from_iter(1 if ch == "1" else 0 for ch in s if ch in "01")

    @classmethod
    def from_int(cls, value: int, nbits: int) -> "Bits":
        """Big-endian bit view of ``value`` padded to ``nbits``."""
        pad = (-nbits) % 8
        nbytes = (nbits + 7) // 8
        return cls((value << pad).to_bytes(nbytes, "big"), nbits)

    def __len__(self) -> int:
        return self.nbits

    def __iter__(self):
        for i in range(self.nbits):
            yield (self.data[i >> 3] >> (7 - (i & 7))) & 1

    def bit(self, i: int) -> int:
        return (self.data[i >> 3] >> (7 - (i & 7))) & 1

    def as_int(self) -> int:
        return int.from_bytes(self.data, "big") >> ((-self.nbits) % 8)

    def __add__(self, other: "Bits") -> "Bits":
        return Bits.from_int(
            (self.as_int() << other.nbits) | other.as_int(), self.nbits + other.nbits
        )


_byte_tables: dict[tuple[int, int], list[int]] = {}


def _byte_table(z: int, q: int) -> list[int]:
    key = (z, q)
    table = _byte_tables.get(key)
    if table is None:
        zp = [pow(z, t, q) for t in range(8)]
        table = []
        for v in range(256):
            acc = 0
            for t in range(8):
                if (v >> (7 - t)) & 1:
                    acc += zp[t]
            table.append(acc % q)
        if len(_byte_tables) > 64:
            _byte_tables.clear()
        _byte_tables[key] = table
    return table


def kr_poly(bits: Bits, z: int, q: int) -> int:
    """sum_i bits[i] * z^i mod q, with i counted from 0 at the first bit."""
    table = _byte_table(z, q)
    z8 = pow(z, 8, q)
    acc = 0
    for byte in reversed(bits.data):
        acc = (acc * z8 + table[byte]) % q
    return acc


def content_digest(payload: bytes) -> int:
    return kr_poly(Bits(payload, 8 * len(payload)), DIGEST_Z, MERSENNE61)


# ---------------------------------------------------------------------------
# hash families


@dataclass(frozen=True)
class PairwiseHash:
    q: int
    a: int
    b: int
    m: int

    def __call__(self, u: int) -> int:
        return ((self.a * u + self.b) % self.q) % self.m


@dataclass(frozen=True)
class SplitHash:
    """(D, l')-iterated pair-wise independent predicate: zero iff some component is."""

    level: int
    q: int
    m: int
    coeffs: tuple[tuple[int, int], ...]
    gamma: int

    def components(self) -> list[PairwiseHash]:
        return [PairwiseHash(self.q, a, b, self.m) for a, b in self.coeffs]

    def is_zero_packed(self, u: int) -> bool:
        q, m = self.q, self.m
        for a, b in self.coeffs:
            if (a * u + b) % q % m == 0:
                return True
        return False

    def is_zero(self, x: int, y: int) -> bool:
        return self.is_zero_packed(x * self.gamma + y)


@dataclass(frozen=True)
class CompressionHash:
    level: int
    q: int
    a: int
    b: int
    alphabet: Alphabet

    def __call__(self, x: int, y: int) -> int:
        al = self.alphabet
        v = ((self.a * (x * al.size + y) + self.b) % self.q) % al.n4
        return al.comp(self.level, v)


@dataclass(frozen=True)
class KrFingerprint:
    q: int
    z: int
    N: int

    def poly(self, bits: Bits) -> int:
        return kr_poly(bits, self.z, self.q)

    def finish(self, poly_value: int) -> int:
        return poly_value % self.N + 1

    def __call__(self, bits: Bits) -> int:
        return self.finish(self.poly(bits))


# ---------------------------------------------------------------------------
# the bundle


@dataclass(eq=False)
class RandomnessBundle:
    params: Params
    seed: int
    q_pair: int
    comp_coeffs: tuple[tuple[int, int], ...]  # levels 1..L
    split_coeffs: tuple[tuple[tuple[int, int], ...], ...]  # levels 0..L
    kr_q: int
    kr_z: int
    ham_omega: int
    ham_rho: int
    ham_gamma: int
    digest: int = 0
    _split: list[SplitHash] = field(default_factory=list, repr=False)
    _comp: list[CompressionHash | None] = field(default_factory=list, repr=False)
    _split_cache: list[dict[int, bool]] = field(default_factory=list, repr=False)
    _comp_cache: list[dict[int, int]] = field(default_factory=list, repr=False)

    def __post_init__(self) -> None:
        P = self.params
        al = P.alphabet()
        self.alphabet = al
        m = P.split_count * P.D
        self._split = [
            SplitHash(lvl, self.q_pair, m, tuple(cs), al.size)
            for lvl, cs in enumerate(self.split_coeffs)
        ]
        self._comp = [None] + [
            CompressionHash(lvl + 1, self.q_pair, a, b, al)
            for lvl, (a, b) in enumerate(self.comp_coeffs)
        ]
        self._split_cache = [dict() for _ in self._split]
        self._comp_cache = [dict() for _ in self._comp]
        self.kr = KrFingerprint(self.kr_q, self.kr_z, P.N)
        if not self.digest:
            self.digest = content_digest(self.payload())

    def __eq__(self, other: object) -> bool:
        return isinstance(other, RandomnessBundle) and self.payload() == other.payload()

    __hash__ = None  # type: ignore[assignment]

    # -- evaluation with caching -----------------------------------------

    def split_hash(self, level: int) -> SplitHash:
        return self._split[level]

    def compression_hash(self, level: int) -> CompressionHash:
        h = self._comp[level]
        assert h is not None
        return h

    def split_is_zero(self, level: int, x: int, y: int) -> bool:
        u = x * self.alphabet.size + y
        cache = self._split_cache[level]
        r = cache.get(u)
        if r is None:
            r = self._split[level].is_zero_packed(u)
            cache[u] = r
        return r

    def compress_pair(self, level: int, x: int, y: int) -> int:
        size = self.alphabet.size
        u = x * size + y
        cache = self._comp_cache[level]
        r = cache.get(u)
        if r is None:
            a, b = self.comp_coeffs[level - 1]
            r = self.alphabet.comp(level, ((a * u + b) % self.q_pair) % self.alphabet.n4)
            cache[u] = r
        return r

    def clear_caches(self) -> None:
        for c in self._split_cache:
            c.clear()
        for c in self._comp_cache:
            c.clear()

    def kr_hash(self, bits: Bits) -> int:
        return self.kr(bits)

    # -- serialization -------------------------------------------------------

    def payload(self) -> bytes:
        P = self.params
        w = IntWriter()
        w.ints([P.n, P.k, P.sigma_size, P.L, P.R, P.D, P.S, P.M, P.T, P.N, P.p])
        w.ints([1 if P.profile == "paper" else 0])
        w.ints([P.c_D.numerator, P.c_D.denominator, P.c_S.numerator, P.c_S.denominator])
        w.ints([self.seed, self.q_pair])
        w.ints([len(self.comp_coeffs)])
        for a, b in self.comp_coeffs:
            w.ints([a, b])
        w.ints([len(self.split_coeffs), len(self.split_coeffs[0]) if self.split_coeffs else 0])
        for level in self.split_coeffs:
            for a, b in level:
                w.ints([a, b])
        w.ints([self.kr_q, self.kr_z, self.ham_omega, self.ham_rho, self.ham_gamma])
        return w.getvalue()

    def to_bytes(self) -> bytes:
        payload = self.payload()
        head = MAGIC + struct.pack("<I", VERSION) + struct.pack("<Q", self.digest)
        return head + payload

    @classmethod
    def from_bytes(cls, data: bytes) -> "RandomnessBundle":
        if data[:4] != MAGIC:
            raise ValueError("not a randomness bundle (bad magic)")
        (version,) = struct.unpack("<I", data[4:8])
        if version != VERSION:
            raise ValueError(f"unsupported bundle version {version}")
        (digest,) = struct.unpack("<Q", data[8:16])
        payload = data[16:]
        if content_digest(payload) != digest:
            raise ValueError("bundle digest mismatch (corrupted file)")
        r = IntReader(payload)
        n, k, sigma, L, R, D, S, M, T, N, p = r.ints(11)
        (paper,) = r.ints(1)
        cdn, cdd, csn, csd = r.ints(4)
        params = Params(
            n=n, k=k, sigma_size=sigma, L=L, R=R, D=D, S=S, M=M, T=T, N=N, p=p,
            profile="paper" if paper else "desk",
            c_D=Fraction(cdn, cdd), c_S=Fraction(csn, csd),
        )
        seed, q_pair = r.ints(2)
        (nc,) = r.ints(1)
        comp = tuple(tuple(r.ints(2)) for _ in range(nc))
        nl, per = r.ints(2)
        split = tuple(tuple(tuple(r.ints(2)) for _ in range(per)) for _ in range(nl))
        kr_q, kr_z, om, rho, gam = r.ints(5)
        return cls(
            params=params, seed=seed, q_pair=q_pair,
            comp_coeffs=comp,  # type: ignore[arg-type]
            split_coeffs=split,  # type: ignore[arg-type]
            kr_q=kr_q, kr_z=kr_z, ham_omega=om, ham_rho=rho, ham_gamma=gam,
            digest=digest,
        )


class IntWriter:
    """Integers as (u64 word count, little-endian 8-byte words)."""

    def __init__(self) -> None:
        self.buf = io.BytesIO()

    def ints(self, values: Sequence[int]) -> None:
        for v in values:
            if v < 0:
                raise ValueError("only non-negative integers are serialized")
            nwords = max(1, (v.bit_length() + 63) // 64)
            self.buf.write(struct.pack("<Q", nwords))
            self.buf.write(v.to_bytes(8 * nwords, "little"))

    def raw(self, data: bytes) -> None:
        self.ints([len(data)])
        self.buf.write(data)

    def getvalue(self) -> bytes:
        return self.buf.getvalue()


class IntReader:
    def __init__(self, data: bytes) -> None:
        self.data = data
        self.pos = 0

    def ints(self, count: int) -> list[int]:
        out = []
        for _ in range(count):
            (nwords,) = struct.unpack_from("<Q", self.data, self.pos)
            self.pos += 8
            end = self.pos + 8 * nwords
            if end > len(self.data):
                raise ValueError("truncated payload")
            out.append(int.from_bytes(self.data[self.pos:end], "little"))
            self.pos = end
        return out

    def raw(self) -> bytes:
        (size,) = self.ints(1)
        end = self.pos + size
        if end > len(self.data):
            raise ValueError("truncated payload")
        out = self.data[self.pos:end]
        self.pos = end
        return out

    def at_end(self) -> bool:
        return self.pos == len(self.data)


def params_echo(P: Params) -> list[int]:
    return [P.n, P.k, P.sigma_size, P.L, P.R, P.D, P.S, P.M, P.T, P.N, P.p]


def write_header(magic: bytes, bundle: "RandomnessBundle") -> IntWriter:
    """Common file header: magic, version, bundle digest and the parameter echo."""
    w = IntWriter()
    w.buf.write(magic + struct.pack("<I", VERSION) + struct.pack("<Q", bundle.digest))
    w.ints(params_echo(bundle.params))
    return w


def read_header(data: bytes, magic: bytes) -> tuple[int, list[int], IntReader]:
    """(bundle digest, parameter echo, reader positioned after the header)."""
    if data[:4] != magic:
        raise ValueError(f"bad magic: expected {magic!r}, got {data[:4]!r}")
    (version,) = struct.unpack("<I", data[4:8])
    if version != VERSION:
        raise ValueError(f"unsupported format version {version}")
    (digest,) = struct.unpack("<Q", data[8:16])
    r = IntReader(data)
    r.pos = 16
    return digest, r.ints(11), r


_prime_cache: dict[int, int] = {}


def next_prime_above(x: int) -> int:
    """Smallest prime strictly greater than x."""
    r = _prime_cache.get(x)
    if r is None:
        r = int(sympy.nextprime(x))
        _prime_cache[x] = r
    return r


def bundle_generate(params: Params, seed: int) -> RandomnessBundle:
    """Draw every hash coefficient for one run; same (params, seed) gives the same bundle."""
    rng = random.Random(seed)
    gamma = params.gamma_size
    q_pair = next_prime_above(gamma * gamma)
    comp = tuple((rng.randrange(1, q_pair), rng.randrange(q_pair)) for _ in range(params.L))
    split = tuple(
        tuple((rng.randrange(1, q_pair), rng.randrange(q_pair)) for _ in range(params.split_count))
        for _ in range(params.L + 1)
    )
    kr_q = next_prime_above(params.N)
    kr_z = rng.randrange(1, kr_q)
    p = params.p
    omega = rng.randrange(2, p - 1)
    rho = rng.randrange(2, p - 1)
    gam = rng.randrange(2, p - 1)
    return RandomnessBundle(
        params=params, seed=seed, q_pair=q_pair, comp_coeffs=comp, split_coeffs=split,
        kr_q=kr_q, kr_z=kr_z, ham_omega=omega, ham_rho=rho, ham_gamma=gam,
    )


def split_is_zero(H: SplitHash, a: int, b: int) -> bool:
    return H.is_zero(a, b)


def compress_pair(C: CompressionHash, a: int, b: int) -> int:
    return C(a, b)


def kr_hash(bits: Bits | str | Iterable[int], key: KrFingerprint) -> int:
    if not isinstance(bits, Bits):
        bits = Bits.from_str(bits) if isinstance(bits, str) else Bits.from_iter(bits)
    return key(bits)


def derived_seed(seed: int, index: int) -> int:
    """Seed of the index-th independent copy drawn from one base seed."""
    h = hashlib.blake2b(f"{seed}:{index}".encode(), digest_size=8)
    return int.from_bytes(h.digest(), "little")


def copy_bundles(bundle: RandomnessBundle, count: int) -> list[RandomnessBundle]:
    """``count`` independent bundles; the first is ``bundle`` itself."""
    if count < 1:
        raise ValueError("need at least one copy")
    return [bundle] + [bundle_generate(bundle.params, derived_seed(bundle.seed, i)) for i in range(1, count)]

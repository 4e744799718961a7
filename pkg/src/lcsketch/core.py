"""Parameters, the working alphabet and the integer order on symbols.

Symbols are handled as plain integers ("ords") throughout the pipeline.
The structured view (``Input`` / ``Comp`` / ``Repeat``) is only used at the
API boundary and in tests; :class:`Alphabet` converts between the two and
answers level / repeat queries directly on ords.

Layout of the order, for input alphabet size ``sigma``, max length ``n`` and
depth ``L``::

    [0, sigma)                          input symbols
    [sigma, sigma + L*n^4)              Comp(level, value) at sigma + (level-1)*n^4 + value
    [sigma + L*n^4, (sigma + L*n^4)*n)  Repeat(base, count) at
                                        sigma + L*n^4 + ord(base)*(n-1) + (count-2)
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Literal, Union

import sympy

MERSENNE61 = (1 << 61) - 1
KR_FLOOR = 1 << 40

Profile = Literal["paper", "desk"]


class ParamError(ValueError):
    """Raised for parameter combinations the construction does not support."""


def log_star(x: float) -> int:
    """Iterated base-2 logarithm: how many times log2 is applied until <= 1."""
    count = 0
    while x > 1:
        x = math.log2(x)
        count += 1
    return count


def ceil_log_three_halves(n: int) -> int:
    """Smallest e >= 0 with (3/2)^e >= n, in exact integer arithmetic."""
    e = 0
    while 3**e < n * 2**e:
        e += 1
    return e


def ceil_log2(x: int) -> int:
    """Smallest e >= 0 with 2^e >= x (x >= 1)."""
    return (x - 1).bit_length()


@dataclass(frozen=True)
class Params:
    n: int
    k: int
    sigma_size: int
    L: int
    R: int
    D: int
    S: int
    M: int
    T: int
    N: int
    p: int
    profile: Profile = "desk"
    c_D: Fraction = Fraction(4)
    c_S: Fraction = Fraction(2)

    def __post_init__(self) -> None:
        if not 1 <= self.k <= self.n:
            raise ParamError(f"need 1 <= k <= n, got k={self.k}, n={self.n}")
        for name in ("sigma_size", "L", "R", "D", "S", "M", "T", "N", "p"):
            if getattr(self, name) <= 0:
                raise ParamError(f"{name} must be positive")

    @property
    def n4(self) -> int:
        return self.n**4

    @property
    def gamma_size(self) -> int:
        return (self.sigma_size + self.L * self.n4) * self.n

    @property
    def W(self) -> int:
        """Bits per record field: ceil(1 + log2 |Gamma|)."""
        return 1 + ceil_log2(self.gamma_size)

    @property
    def split_count(self) -> int:
        """Number of component hashes in each split hash: 5 * ceil(log2 n)."""
        return max(1, 5 * ceil_log2(self.n))

    @property
    def log_n(self) -> float:
        return math.log2(self.n) if self.n > 1 else 0.0

    @property
    def dict_limit(self) -> int:
        """Largest block dictionary tolerated before the split is declared failed."""
        return math.ceil(5 * self.D * max(1.0, self.log_n))

    @property
    def rolling_block_capacity(self) -> int:
        return (4 * self.T + 1) * (self.k + 2)

    def alphabet(self) -> "Alphabet":
        return Alphabet(self.sigma_size, self.n, self.L)


def derive_params(
    n: int,
    k: int,
    sigma_size: int = 256,
    profile: Profile = "desk",
    c_D: Fraction | int | float | str = 4,
    c_S: Fraction | int | float | str = 2,
) -> Params:
    if n < 1:
        raise ParamError("n must be positive")
    if not 1 <= k <= n:
        raise ParamError(f"need 1 <= k <= n, got k={k}, n={n}")
    if not 1 <= sigma_size <= n**3:
        raise ParamError(f"sigma_size must lie in [1, n^3], got {sigma_size}")
    if profile == "paper":
        c_D, c_S = Fraction(110), Fraction(15)
    elif profile == "desk":
        c_D, c_S = Fraction(c_D), Fraction(c_S)
        if c_D <= 0 or c_S <= 0:
            raise ParamError("desk multipliers must be positive")
    else:
        raise ParamError(f"unknown profile {profile!r}")

    L = ceil_log_three_halves(n) + 3
    gamma = (sigma_size + L * n**4) * n
    R = log_star(gamma) + 20
    D = math.ceil(c_D * R * (L + 1) * k)
    log_n = math.log2(n) if n > 1 else 0.0
    S = math.ceil(float(c_S) * D * L * log_n) + 3
    W = 1 + ceil_log2(gamma)
    M = 3 * S * W
    T = L * (3 * R + 6)
    N = max(n**3, KR_FLOOR)
    if profile == "desk":
        p = MERSENNE61
    else:
        p = int(sympy.nextprime(max(2 * N + 1, (n * M) ** 3) - 1))
    return Params(
        n=n, k=k, sigma_size=sigma_size, L=L, R=R, D=D, S=S, M=M, T=T,
        N=N, p=p, profile=profile, c_D=c_D, c_S=c_S,
    )


# ---------------------------------------------------------------------------
# Structured symbols


@dataclass(frozen=True)
class Input:
    code: int


@dataclass(frozen=True)
class Comp:
    level: int
    value: int


@dataclass(frozen=True)
class Repeat:
    base: Union[Input, Comp]
    count: int


SymbolId = Union[Input, Comp, Repeat]


@dataclass(frozen=True)
class Alphabet:
    """Integer view of the working alphabet for fixed (sigma, n, L)."""

    sigma_size: int
    n: int
    L: int
    n4: int = field(init=False)
    comp_end: int = field(init=False)
    size: int = field(init=False)

    def __post_init__(self) -> None:
        n4 = self.n**4
        object.__setattr__(self, "n4", n4)
        object.__setattr__(self, "comp_end", self.sigma_size + self.L * n4)
        object.__setattr__(self, "size", (self.sigma_size + self.L * n4) * self.n)

    # -- classification on ords -------------------------------------------

    def is_input(self, o: int) -> bool:
        return o < self.sigma_size

    def is_comp(self, o: int) -> bool:
        return self.sigma_size <= o < self.comp_end

    def is_repeat(self, o: int) -> bool:
        return o >= self.comp_end

    def comp(self, level: int, value: int) -> int:
        return self.sigma_size + (level - 1) * self.n4 + value

    def repeat(self, base: int, count: int) -> int:
        """Ord of r_{base,count}; a repeat of a repeat collapses by multiplying counts."""
        if base >= self.comp_end:
            inner, c0 = self.repeat_parts(base)
            base, count = inner, c0 * count
        if not 2 <= count <= self.n:
            raise ValueError(f"repeat count {count} outside [2, {self.n}]")
        return self.comp_end + base * (self.n - 1) + (count - 2)

    def repeat_parts(self, o: int) -> tuple[int, int]:
        q, r = divmod(o - self.comp_end, self.n - 1)
        return q, r + 2

    def level(self, o: int) -> int:
        """Input symbols are level 0, Comp(l, .) is level l, r_{a,r} is level(a)+1."""
        if o < self.sigma_size:
            return 0
        if o < self.comp_end:
            return (o - self.sigma_size) // self.n4 + 1
        base, _ = self.repeat_parts(o)
        return self.level(base) + 1

    def check(self, o: int) -> None:
        if not 0 <= o < self.size:
            raise ValueError(f"ord {o} outside [0, {self.size})")

    # -- structured view ----------------------------------------------------

    def ord(self, s: SymbolId) -> int:
        if isinstance(s, Input):
            if not 0 <= s.code < self.sigma_size:
                raise ValueError(f"input code {s.code} out of range")
            return s.code
        if isinstance(s, Comp):
            if not 1 <= s.level <= self.L or not 0 <= s.value < self.n4:
                raise ValueError(f"bad compression symbol {s}")
            return self.comp(s.level, s.value)
        if isinstance(s, Repeat):
            return self.repeat(self.ord(s.base), s.count)
        raise TypeError(f"not a symbol: {s!r}")

    def symbol(self, o: int) -> SymbolId:
        self.check(o)
        if o < self.sigma_size:
            return Input(o)
        if o < self.comp_end:
            level, value = divmod(o - self.sigma_size, self.n4)
            return Comp(level + 1, value)
        base, count = self.repeat_parts(o)
        return Repeat(self.symbol(base), count)  # type: ignore[arg-type]


def symbol_ord(s: SymbolId, params: Params) -> int:
    return params.alphabet().ord(s)


def symbol_from_ord(o: int, params: Params) -> SymbolId:
    return params.alphabet().symbol(o)

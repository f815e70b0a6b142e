"""Exact p-adic scalars restricted to the ring Z[1/p].

A :class:`PRational` is ``num / p**kexp``.  Every lattice point, matrix entry
and character argument used in this package lives in that ring, which makes
the fractional part and the additive character exact.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import total_ordering
from typing import Iterable, Sequence

INF = math.inf  # order of zero


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


def ord_int(n: int, p: int):
    """p-adic valuation of an integer; ``INF`` for zero."""
    if n == 0:
        return INF
    n = abs(n)
    e = 0
    while n % p == 0:
        n //= p
        e += 1
    return e


@total_ordering
@dataclass(frozen=True, eq=False)
class PRational:
    """The p-rational number ``num / prime**kexp`` kept in canonical form."""

    num: int
    kexp: int = 0
    prime: int = 2

    def __post_init__(self):
        p = self.prime
        if not isinstance(p, int) or not is_prime(p):
            raise ValueError(f"prime must be a prime integer, got {p!r}")
        num, kexp = int(self.num), int(self.kexp)
        if num == 0:
            kexp = 0
        else:
            if kexp < 0:
                num *= p ** (-kexp)
                kexp = 0
            while kexp > 0 and num % p == 0:
                num //= p
                kexp -= 1
        object.__setattr__(self, "num", num)
        object.__setattr__(self, "kexp", kexp)

    @classmethod
    def from_fraction(cls, x, prime: int) -> "PRational":
        """Convert an int or Fraction whose denominator is a power of ``prime``."""
        x = Fraction(x)
        den = x.denominator
        k = 0
        while den % prime == 0:
            den //= prime
            k += 1
        if den != 1:
            raise ValueError(f"{x} is not a {prime}-rational")
        return cls(x.numerator, k, prime)

    @classmethod
    def parse(cls, text: str, prime: int) -> "PRational":
        """Parse ``"m"``, ``"m/q"`` or ``"m/p^k"``."""
        s = text.strip().replace(" ", "")
        if "/" in s:
            a, b = s.split("/", 1)
            if "^" in b:
                base, e = b.split("^", 1)
                den = int(base) ** int(e)
            else:
                den = int(b)
            return cls.from_fraction(Fraction(int(a), den), prime)
        return cls(int(s), 0, prime)

    # -- views --------------------------------------------------------------
    @property
    def order(self):
        if self.num == 0:
            return INF
        return ord_int(self.num, self.prime) - self.kexp

    def to_fraction(self) -> Fraction:
        return Fraction(self.num, self.prime**self.kexp)

    def __float__(self) -> float:
        return self.num / self.prime**self.kexp

    def canonical(self) -> "PRational":
        return PRational(self.num, self.kexp, self.prime)

    # -- arithmetic ---------------------------------------------------------
    def _coerce(self, other) -> "PRational":
        if isinstance(other, PRational):
            if other.prime != self.prime:
                raise ValueError("mixed primes")
            return other
        if isinstance(other, (int, Fraction)):
            return PRational.from_fraction(other, self.prime)
        return NotImplemented

    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        k = max(self.kexp, o.kexp)
        p = self.prime
        return PRational(self.num * p ** (k - self.kexp) + o.num * p ** (k - o.kexp), k, p)

    __radd__ = __add__

    def __neg__(self):
        return PRational(-self.num, self.kexp, self.prime)

    def __sub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return self + (-o)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return PRational(self.num * o.num, self.kexp + o.kexp, self.prime)

    __rmul__ = __mul__

    def scale(self, e: int) -> "PRational":
        """Multiply by ``p**e`` (``e`` may be negative)."""
        return PRational(self.num, self.kexp - e, self.prime)

    def __eq__(self, other):
        if isinstance(other, PRational):
            return (self.prime, self.num, self.kexp) == (other.prime, other.num, other.kexp)
        if isinstance(other, (int, Fraction)):
            return self.to_fraction() == other
        return NotImplemented

    def __lt__(self, other):
        if isinstance(other, PRational):
            return self.to_fraction() < other.to_fraction()
        return self.to_fraction() < other

    def __hash__(self):
        return hash((self.prime, self.num, self.kexp))

    def __repr__(self):
        if self.kexp == 0:
            return f"PRational({self.num}, p={self.prime})"
        return f"PRational({self.num}/{self.prime}^{self.kexp})"


def padic_norm(x: PRational) -> Fraction:
    """``|x|_p`` as an exact rational: 0 or ``p**(-ord x)``."""
    if x.num == 0:
        return Fraction(0)
    return Fraction(x.prime) ** (-x.order)


def fractional_part(x: PRational) -> PRational:
    """``{x}_p``: the representative of ``x mod Z_p`` in ``[0, 1)``."""
    if x.num == 0 or x.kexp == 0:
        return PRational(0, 0, x.prime)
    q = x.prime**x.kexp
    return PRational(x.num % q, x.kexp, x.prime)


def chi(x: PRational) -> complex:
    """Additive character ``exp(2 pi i {x}_p)``."""
    r = fractional_part(x)
    if r.num == 0:
        return 1 + 0j
    return cmath.exp(2j * math.pi * r.num / x.prime**r.kexp)


@dataclass(frozen=True)
class PVector:
    coords: tuple

    def __post_init__(self):
        coords = tuple(self.coords)
        if not coords:
            raise ValueError("empty PVector")
        primes = {c.prime for c in coords}
        if len(primes) != 1:
            raise ValueError("coordinates must share one prime")
        object.__setattr__(self, "coords", coords)

    @classmethod
    def of(cls, values: Iterable, prime: int) -> "PVector":
        return cls(tuple(v if isinstance(v, PRational) else PRational.from_fraction(v, prime)
                         for v in values))

    @property
    def prime(self) -> int:
        return self.coords[0].prime

    @property
    def dim(self) -> int:
        return len(self.coords)

    @property
    def order(self):
        return min(c.order for c in self.coords)

    def __add__(self, other: "PVector") -> "PVector":
        return PVector(tuple(a + b for a, b in zip(self.coords, other.coords)))

    def __neg__(self):
        return PVector(tuple(-a for a in self.coords))

    def __sub__(self, other):
        return self + (-other)

    def __iter__(self):
        return iter(self.coords)

    def __len__(self):
        return len(self.coords)

    def __getitem__(self, i):
        return self.coords[i]

    def is_zero(self) -> bool:
        return all(c.num == 0 for c in self.coords)

    def common_denominator(self) -> tuple[list[int], int]:
        """Return integers ``X`` and ``a`` with ``self == X / p**a``."""
        a = max(c.kexp for c in self.coords)
        p = self.prime
        return [c.num * p ** (a - c.kexp) for c in self.coords], a


def vector_norm(x: PVector) -> Fraction:
    """``||x||_p = max_i |x_i|_p``."""
    return max(padic_norm(c) for c in x.coords)


def vector_order(x: Sequence[PRational]):
    return min(c.order for c in x)

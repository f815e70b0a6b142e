"""Independent reference computations.

Nothing here calls the package code paths under test.  Sums are written out
directly from definitions (exact rationals where possible) so that agreement
with the library is evidence rather than tautology.
"""
from __future__ import annotations

import cmath
import itertools
import math
from fractions import Fraction


def ord_p(n: int, p: int) -> int:
    if n == 0:
        raise ValueError("ord of 0")
    e = 0
    while n % p == 0:
        n //= p
        e += 1
    return e


def frac_part(x: Fraction, p: int) -> Fraction:
    """{x}_p for x = a / p^k, straight from the digit expansion."""
    d = x.denominator
    k = 0
    while d % p == 0:
        d //= p
        k += 1
    assert d == 1, "oracle only handles p-power denominators"
    return Fraction(x.numerator % p**k, p**k) if k else Fraction(0)


def chi(x: Fraction, p: int) -> complex:
    return cmath.exp(2j * math.pi * float(frac_part(x, p)))


def dft_direct(values, p, N, j, k, matrix, sign=1):
    """Self-dual transform on B_j / B_-k, one character at a time.

    ``matrix`` is a list of rows of Fractions; returns frequency values on
    the dual lattice (k + beta, j - beta) in row-major order.
    """
    entries = [v for row in matrix for v in row if v != 0]
    beta = min(ord_p(v.numerator, p) - ord_p(v.denominator, p) for v in entries)
    det = _det(matrix)
    det_ord = ord_p(det.numerator, p) - ord_p(det.denominator, p)
    cq = p ** (-det_ord / 2)
    side = p ** (j + k)
    jf = k + beta
    pts = list(itertools.product(range(side), repeat=N))
    vol = Fraction(1, p ** (k * N))
    out = []
    for n in pts:
        xi = [Fraction(v, p**jf) for v in n]
        acc = 0j
        for idx, m in enumerate(pts):
            x = [Fraction(v, p**j) for v in m]
            bx = sum(x[r] * matrix[r][c] * xi[c] for r in range(N) for c in range(N))
            acc += values[idx] * chi(sign * bx, p)
        out.append(acc * cq * float(vol))
    return out


def _det(M):
    n = len(M)
    if n == 1:
        return Fraction(M[0][0])
    return sum((-1) ** c * M[0][c] * _det([r[:c] + r[c + 1:] for r in M[1:]]) for c in range(n))


def radial_kg_origin(p, alpha, m, emax=0, emin=-40):
    """int_{B_emax} 1 / (|xi|^alpha + m^2) d xi, summed over spheres (N = 1, l = xi)."""
    return sum((1 - 1 / p) * p**e / (p ** (alpha * e) + m * m) for e in range(emin, emax + 1))


def radial_solution_n1(p, alpha, m, a, emin=-200):
    """u = F^-1(1_{Z_p} / (|xi|^alpha + m^2)) at ||x|| = p^a, N = 1, l = xi."""
    h = lambda e: 1.0 / (p ** (alpha * e) + m * m)
    if a <= 0:
        return sum((1 - 1 / p) * p**e * h(e) for e in range(emin, 1))
    return sum((1 - 1 / p) * p**e * h(e) for e in range(emin, -a + 1)) - p ** (-a) * h(1 - a)


def green_radial_sum_of_squares(p, alpha, m, e, N=2, emin=-200):
    """G at ||x|| = p^e when |l(xi)|_p = ||xi||^2 (e.g. xi1^2 + xi2^2 for p = 3 mod 4)."""
    h = lambda t: 1.0 / (p ** (2 * alpha * t) + m * m)
    tot = sum((1 - p ** (-N)) * p ** (t * N) * h(t) for t in range(emin, -e + 1))
    return tot - p ** (-e * N) * h(1 - e)


def z_alpha_enumeration(poly_fn, p, N, level, alpha):
    """p^{-level N} sum over unit z mod p^level of |l(z)|_p^alpha."""
    q = p**level
    total = 0.0
    for z in itertools.product(range(q), repeat=N):
        if all(v % p == 0 for v in z):
            continue
        val = poly_fn(z) % q
        o = ord_p(val, p) if val else level
        assert o < level, "level too small for this oracle"
        total += p ** (-alpha * o)
    return total / q**N


def bell(m: int) -> int:
    row = [1]
    for _ in range(m):
        nxt = [row[-1]]
        for v in row:
            nxt.append(nxt[-1] + v)
        row = nxt
    return row[0]


def wick_pairings(n: int):
    """All perfect matchings of range(n)."""
    if n == 0:
        yield []
        return
    first = 0
    for other in range(1, n):
        rest = [i for i in range(1, n) if i != other]
        for tail in wick_pairings(len(rest)):
            yield [(first, other)] + [(rest[a], rest[b]) for a, b in tail]

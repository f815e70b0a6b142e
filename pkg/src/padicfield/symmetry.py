"""Euclidean group elements ``x -> a + g x`` that preserve ``(B, l)``.

Preservation of the bilinear form and of the polynomial is decided exactly
over the rationals.  Only elements with ``g`` in ``GL_N(Z_p)`` and a lattice
translation can act on grid functions; they permute lattice points.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .lattice import FREQUENCY, POSITION, BilinearForm, GridFn, Lattice, LatticeMismatch, fourier_forward
from .operators import EllipticPolynomial
from .padic import PRational, ord_int


class NotLatticeStable(ValueError):
    pass


def _to_fraction(v, p: int) -> Fraction:
    if isinstance(v, PRational):
        return v.to_fraction()
    if isinstance(v, str):
        return PRational.parse(v, p).to_fraction() if "^" in v else Fraction(v)
    return Fraction(v)


def _matmul(A, B):
    return tuple(tuple(sum(A[i][t] * B[t][c] for t in range(len(B))) for c in range(len(B[0])))
                 for i in range(len(A)))


def _transpose(A):
    return tuple(zip(*A))


def _det(A) -> Fraction:
    n = len(A)
    M = [list(r) for r in A]
    det = Fraction(1)
    for c in range(n):
        piv = next((r for r in range(c, n) if M[r][c] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != c:
            M[c], M[piv] = M[piv], M[c]
            det = -det
        det *= M[c][c]
        for r in range(c + 1, n):
            f = M[r][c] / M[c][c]
            for t in range(c, n):
                M[r][t] -= f * M[c][t]
    return det


def _inverse(A):
    n = len(A)
    M = [list(r) + [Fraction(int(i == c)) for c in range(n)] for i, r in enumerate(A)]
    for c in range(n):
        piv = next((r for r in range(c, n) if M[r][c] != 0), None)
        if piv is None:
            raise ValueError("singular matrix")
        M[c], M[piv] = M[piv], M[c]
        inv = 1 / M[c][c]
        M[c] = [v * inv for v in M[c]]
        for r in range(n):
            if r != c and M[r][c] != 0:
                f = M[r][c]
                M[r] = [a - f * b for a, b in zip(M[r], M[c])]
    return tuple(tuple(r[n:]) for r in M)


def _frac_ord(x: Fraction, p: int):
    if x == 0:
        return None
    return ord_int(x.numerator, p) - ord_int(x.denominator, p)


@dataclass(frozen=True)
class EuclideanElement:
    """``(a, g)``: the map ``x -> a + g x``.  Entries are exact rationals."""

    g: tuple
    a: tuple
    prime: int

    def __post_init__(self):
        g = tuple(tuple(_to_fraction(v, self.prime) for v in row) for row in self.g)
        n = len(g)
        if any(len(r) != n for r in g):
            raise ValueError("g must be square")
        a = tuple(_to_fraction(v, self.prime) for v in (self.a if self.a is not None else [0] * n))
        if len(a) != n:
            raise ValueError("translation has the wrong dimension")
        if _det(g) == 0:
            raise ValueError("g is singular")
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "a", a)

    @classmethod
    def linear(cls, g, prime: int) -> "EuclideanElement":
        return cls(g, None, prime)

    @classmethod
    def identity(cls, N: int, prime: int) -> "EuclideanElement":
        return cls(tuple(tuple(int(i == c) for c in range(N)) for i in range(N)), None, prime)

    @classmethod
    def translation(cls, a, prime: int) -> "EuclideanElement":
        N = len(a)
        return cls(tuple(tuple(int(i == c) for c in range(N)) for i in range(N)), tuple(a), prime)

    @property
    def N(self) -> int:
        return len(self.g)

    @property
    def det(self) -> Fraction:
        return _det(self.g)

    def det_norm(self) -> Fraction:
        e = _frac_ord(self.det, self.prime)
        return Fraction(self.prime) ** -e

    def compose(self, other: "EuclideanElement") -> "EuclideanElement":
        """``self o other``."""
        ga = _matmul(self.g, tuple((v,) for v in other.a))
        return EuclideanElement(_matmul(self.g, other.g), tuple(x + y[0] for x, y in zip(self.a, ga)),
                                self.prime)

    def inverse(self) -> "EuclideanElement":
        gi = _inverse(self.g)
        a = _matmul(gi, tuple((v,) for v in self.a))
        return EuclideanElement(gi, tuple(-r[0] for r in a), self.prime)

    def linear_part(self) -> "EuclideanElement":
        return EuclideanElement(self.g, None, self.prime)

    def is_integral_unimodular(self) -> bool:
        """``g`` in ``GL_N(Z_p)``: p-integral entries and unit determinant."""
        p = self.prime
        if any(v.denominator % p == 0 for row in self.g for v in row):
            return False
        return _frac_ord(self.det, p) == 0


def signed_permutations(N: int, prime: int) -> list[EuclideanElement]:
    """All ``2^N N!`` signed permutation matrices."""
    out = []
    for perm in itertools.permutations(range(N)):
        for signs in itertools.product((1, -1), repeat=N):
            g = tuple(tuple(signs[i] if c == perm[i] else 0 for c in range(N)) for i in range(N))
            out.append(EuclideanElement.linear(g, prime))
    return out


def _as_matrix(g, p):
    if isinstance(g, EuclideanElement):
        return g.g
    m = tuple(tuple(_to_fraction(v, p) for v in row) for row in g)
    if _det(m) == 0:
        raise ValueError("g is singular")
    return m


def preserves_quadratic(g, B: BilinearForm) -> bool:
    """Exact check of ``g^T [B] g = [B]``."""
    gm = _as_matrix(g, B.prime)
    if len(gm) != B.N:
        raise ValueError("dimension mismatch")
    b = B.fraction_matrix()
    return _matmul(_matmul(_transpose(gm), b), gm) == tuple(tuple(r) for r in b)


# -- polynomial composition ----------------------------------------------------

def _poly_mul(P, Q):
    out: dict = {}
    for e1, c1 in P.items():
        for e2, c2 in Q.items():
            e = tuple(a + b for a, b in zip(e1, e2))
            out[e] = out.get(e, 0) + c1 * c2
    return {e: c for e, c in out.items() if c != 0}


def compose_polynomial(poly: EllipticPolynomial, g) -> dict:
    """Coefficients of ``xi -> l(g xi)`` as ``{exponents: Fraction}``."""
    gm = _as_matrix(g, poly.p)
    N = poly.N
    if len(gm) != N:
        raise ValueError("dimension mismatch")
    unit = [tuple(int(i == c) for i in range(N)) for c in range(N)]
    linear = [{unit[c]: gm[r][c] for c in range(N) if gm[r][c] != 0} for r in range(N)]
    total: dict = {}
    for exps, coef in poly.terms:
        term = {tuple([0] * N): Fraction(coef)}
        for r, a in enumerate(exps):
            for _ in range(a):
                term = _poly_mul(term, linear[r])
        for e, c in term.items():
            total[e] = total.get(e, 0) + c
    return {e: c for e, c in total.items() if c != 0}


def preserves_polynomial(g, poly: EllipticPolynomial) -> bool:
    """True iff ``l(g xi)`` and ``l(xi)`` have identical coefficients."""
    return compose_polynomial(poly, g) == {e: Fraction(c) for e, c in poly.terms}


# -- action on grid functions -----------------------------------------------------

def _index_map(lat: Lattice, gm, a_idx=None) -> np.ndarray:
    """Flat index of ``g m + a_idx`` (mod side) for every index vector ``m``."""
    side = lat.side
    M = np.empty((lat.N, lat.N), dtype=np.int64)
    for i, row in enumerate(gm):
        for c, v in enumerate(row):
            M[i, c] = v.numerator * pow(v.denominator, -1, side) % side
    m = lat.indices()
    img = (m @ M.T) % side
    if a_idx is not None:
        img = (img + np.asarray(a_idx, dtype=np.int64)) % side
    return np.ravel_multi_index(tuple(img.T), lat.shape)


def _translation_index(lat: Lattice, a) -> list[int]:
    out = []
    for v in a:
        s = v * lat.p**lat.j
        if s.denominator % lat.p == 0:
            raise NotLatticeStable(f"translation {v} is finer than the lattice resolution")
        out.append(s.numerator * pow(s.denominator, -1, lat.side) % lat.side)
    return out


def act_on_function(f: GridFn, e: EuclideanElement) -> GridFn:
    """``((a, g) f)(x) = f(g^-1 (x - a))``."""
    if f.tag != POSITION:
        raise LatticeMismatch("expected a position-tagged GridFn")
    lat = f.lattice
    if e.N != lat.N:
        raise LatticeMismatch("element and lattice dimensions differ")
    if not e.is_integral_unimodular():
        raise NotLatticeStable("g is not in GL_N(Z_p), so it does not permute the lattice")
    # translations by elements of B_{-k} are invisible; anything outside B_j is taken mod B_j
    img = _index_map(lat, e.g, _translation_index(lat, e.a))
    vals = np.empty_like(f.values)
    vals[img] = f.values
    return GridFn(lat, vals, POSITION)


def covariance_rhs(f: GridFn, e: EuclideanElement, B: BilinearForm) -> GridFn:
    """``chi(B(a, xi)) F[f](g^-1 xi)`` on the frequency lattice."""
    fh = fourier_forward(f, B)
    freq = fh.lattice
    if not e.is_integral_unimodular():
        raise NotLatticeStable("g is not in GL_N(Z_p)")
    ginv = _inverse(e.g)
    src = _index_map(freq, ginv)
    a_idx = np.array(_translation_index(f.lattice, e.a), dtype=np.int64)
    bt = B.reduced_int()
    n = freq.indices()
    phase = ((n @ bt.T) @ a_idx) % freq.side  # a^T B~ n, with side(freq) = side(f)
    return GridFn(freq, fh.values[src] * np.exp(2j * np.pi * phase / freq.side), FREQUENCY)


# -- invariance report ----------------------------------------------------------------

@dataclass(frozen=True)
class InvarianceRow:
    element: EuclideanElement
    preserves_quadratic: bool
    preserves_polynomial: bool
    green_deviation: float | None
    schwinger_deviation: float | None
    reason: str = ""

    @property
    def passed(self) -> bool:
        return self.preserves_quadratic and self.preserves_polynomial and self.green_deviation is not None


def invariance_report(G, elements: Sequence[EuclideanElement], B: BilinearForm, levy=None,
                      tests: Sequence[GridFn] | None = None) -> list[InvarianceRow]:
    """Green and two-point Schwinger deviations under each element.

    Elements failing a preservation check are reported with ``None``
    deviations and a reason, never dropped.
    """
    from .moments import schwinger_analytic
    from .noise import LevyTriple

    lat = G.lattice
    poly = G.poly
    kernel = G.as_gridfn()
    levy = levy if levy is not None else LevyTriple.gaussian(1.0)
    if tests is None:
        tests = (lat.omega(), lat.ball(-1) if lat.k >= 1 else lat.omega())
    s_ref = schwinger_analytic(list(tests), levy, G, B)
    rows = []
    for e in elements:
        pq = preserves_quadratic(e.g, B)
        pp = preserves_polynomial(e.g, poly)
        if not (pq and pp):
            why = "does not preserve " + " and ".join(
                n for n, ok in (("the bilinear form", pq), ("the polynomial", pp)) if not ok)
            rows.append(InvarianceRow(e, pq, pp, None, None, why))
            continue
        try:
            moved = act_on_function(kernel, e.linear_part())
            moved_tests = [act_on_function(t, e) for t in tests]
        except NotLatticeStable as exc:
            rows.append(InvarianceRow(e, pq, pp, None, None, str(exc)))
            continue
        dev = float(np.max(np.abs(moved.values - kernel.values)))
        sdev = abs(schwinger_analytic(moved_tests, levy, G, B) - s_ref)
        rows.append(InvarianceRow(e, pq, pp, dev, sdev))
    return rows

"""Elliptic polynomials, pseudodifferential symbols and Green functions.

Two Green evaluators are provided and cross-check each other:

* :func:`green_spectral` inverts the resolvent symbol ``1/(|l(xi)|^alpha + m^2)``
  on the frequency lattice.  The symbol is averaged exactly over each
  frequency cell, so the lattice value at ``x`` is the exact average of ``G``
  over the position cell of ``x`` (``G`` restricted to ``B_j``).
* :func:`green_series` sums the shell decomposition ``G = sum_l g^(l)`` with
  the covering of the unit sphere supplied by an ellipticity certificate.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np

from . import kernels
from .lattice import (
    FREQUENCY,
    POSITION,
    BilinearForm,
    GridFn,
    Lattice,
    LatticeMismatch,
    _index_orders,
    _indices,
    fourier_forward,
    fourier_inverse,
)
from .padic import PRational, PVector, is_prime, ord_int


class PolynomialSyntaxError(ValueError):
    pass


class NotCertified(ValueError):
    """The polynomial vanishes mod ``p**level`` at a unit vector."""

    def __init__(self, witness, level, prime):
        self.witness = tuple(int(v) for v in witness)
        self.level = level
        self.witness_mod_p = tuple(v % prime for v in self.witness)
        super().__init__(
            f"l(z) = 0 mod {prime}^{level} at unit vector z = {self.witness}")


# -- polynomials --------------------------------------------------------------

_FACTOR = re.compile(r"x(\d+)(?:\^(\d+))?")


@dataclass(frozen=True)
class EllipticPolynomial:
    """Homogeneous integer polynomial ``sum c * prod_i xi_i**a_i``.

    ``terms`` holds ``(exponent tuple, coefficient)`` pairs.  Ellipticity
    (vanishing only at the origin) is established by :func:`certify_elliptic`,
    not at construction.
    """

    p: int
    N: int
    terms: tuple

    def __post_init__(self):
        if not is_prime(self.p):
            raise ValueError(f"p={self.p} is not prime")
        merged: dict = {}
        for exps, c in self.terms:
            exps = tuple(int(a) for a in exps)
            if len(exps) != self.N or any(a < 0 for a in exps):
                raise ValueError(f"bad exponent vector {exps} for N={self.N}")
            merged[exps] = merged.get(exps, 0) + int(c)
        terms = tuple(sorted(((e, c) for e, c in merged.items() if c), reverse=True))
        if not terms:
            raise ValueError("zero polynomial")
        degs = {sum(e) for e, _ in terms}
        if len(degs) != 1:
            raise ValueError(f"polynomial is not homogeneous (degrees {sorted(degs)})")
        if degs == {0}:
            raise ValueError("constant polynomial")
        object.__setattr__(self, "terms", terms)

    @property
    def degree(self) -> int:
        return sum(self.terms[0][0])

    @classmethod
    def parse(cls, text: str, p: int, N: int | None = None) -> "EllipticPolynomial":
        """Parse literals such as ``"x1^2 + x2^2"`` or ``"2*x1*x2^3 - x3^4"``."""
        s = text.replace(" ", "")
        if not s:
            raise PolynomialSyntaxError("empty polynomial literal")
        if s[0] not in "+-":
            s = "+" + s
        pieces = re.findall(r"[+-][^+-]*", s)
        if "".join(pieces) != s:
            raise PolynomialSyntaxError(f"cannot parse {text!r}")
        terms = []
        nvar = 0
        for piece in pieces:
            sign = -1 if piece[0] == "-" else 1
            body = piece[1:]
            if not body:
                raise PolynomialSyntaxError(f"dangling sign in {text!r}")
            coef = sign
            powers: dict = {}
            for factor in body.split("*"):
                if factor.isdigit():
                    coef *= int(factor)
                    continue
                m = _FACTOR.fullmatch(factor)
                if not m or int(m.group(1)) < 1:
                    raise PolynomialSyntaxError(f"bad factor {factor!r} in {text!r}")
                var = int(m.group(1))
                powers[var] = powers.get(var, 0) + int(m.group(2) or 1)
                nvar = max(nvar, var)
            terms.append((powers, coef))
        N = nvar if N is None else N
        if nvar > N:
            raise PolynomialSyntaxError(f"variable x{nvar} exceeds dimension N={N}")
        return cls(p, N, tuple((tuple(pw.get(i + 1, 0) for i in range(N)), c) for pw, c in terms))

    def literal(self) -> str:
        out = []
        for exps, c in self.terms:
            mono = "*".join(f"x{i + 1}" + (f"^{a}" if a > 1 else "") for i, a in enumerate(exps) if a)
            mag = abs(c)
            body = mono if mag == 1 else f"{mag}*{mono}"
            out.append(("-" if c < 0 else "+") + body)
        s = "".join(out)
        return s[1:] if s.startswith("+") else s

    def __call__(self, x):
        """Exact evaluation on ints, Fractions or PRationals."""
        acc = 0
        for exps, c in self.terms:
            t = c
            for xi, a in zip(x, exps):
                if a:
                    t = t * xi**a if not isinstance(xi, PRational) else xi_pow(xi, a) * t
            acc = acc + t
        return acc

    def abs_p(self, x: PVector) -> Fraction:
        """``|l(x)|_p`` exactly."""
        v = self(list(x.coords))
        if isinstance(v, PRational):
            v = v.to_fraction()
        v = Fraction(v)
        if v == 0:
            return Fraction(0)
        return Fraction(self.p) ** -(ord_int(v.numerator, self.p) - ord_int(v.denominator, self.p))

    def residues(self, level: int) -> np.ndarray:
        """``l(z) mod p**level`` for all ``z`` in ``(Z/p^level)^N``, row-major."""
        modulus = self.p**level
        exps = np.array([e for e, _ in self.terms], dtype=np.int64)
        coefs = np.array([c % modulus for _, c in self.terms], dtype=np.int64)
        return kernels.poly_residue_table(exps, coefs, self.N, modulus)


def xi_pow(x: PRational, a: int) -> PRational:
    out = PRational(1, 0, x.prime)
    for _ in range(a):
        out = out * x
    return out


def _ord_capped(values: np.ndarray, p: int, cap: int) -> np.ndarray:
    ords = np.full(values.shape, cap, dtype=np.int64)
    rem = values.copy()
    for e in range(cap):
        hit = (rem % p != 0) & (ords == cap)
        ords[hit] = e
        rem //= p
    return ords


# -- certification ------------------------------------------------------------

RECHECK_LIMIT = 2_000_000  # table size above which the level-(L+1) recheck is skipped


@dataclass(frozen=True, eq=False)
class EllipticityCertificate:
    """Covering data for the unit sphere at level ``L``.

    ``ord_table`` has shape ``(p**L,)*N``; entry ``z`` holds ``ord_p l(z)`` for
    unit classes and ``-1`` for non-unit classes.  ``c0``/``c1`` are the min
    and max of ``|l|`` on the unit sphere, ``gamma = c0**alpha``.
    """

    poly: EllipticPolynomial
    level: int
    ord_table: np.ndarray
    alpha: float = 1.0
    rechecked: bool = True

    @property
    def unit_ords(self) -> np.ndarray:
        t = self.ord_table.reshape(-1)
        return t[t >= 0]

    @property
    def reps(self) -> int:
        return int(self.unit_ords.size)

    @property
    def c0(self) -> Fraction:
        return Fraction(self.poly.p) ** -int(self.unit_ords.max())

    @property
    def c1(self) -> Fraction:
        return Fraction(self.poly.p) ** -int(self.unit_ords.min())

    @property
    def gamma(self) -> float:
        return float(self.c0) ** self.alpha

    def gamma_for(self, alpha: float) -> float:
        return float(self.c0) ** alpha

    def representatives(self) -> tuple[np.ndarray, np.ndarray]:
        """Unit representatives ``z`` in ``[0, p^L)^N`` and their ``ord_p l(z)``."""
        p, N, L = self.poly.p, self.poly.N, self.level
        idx = _indices(p, N, L)
        t = self.ord_table.reshape(-1)
        mask = t >= 0
        return np.ascontiguousarray(idx[mask]), t[mask]

    def summary(self) -> dict:
        return {
            "poly": self.poly.literal(),
            "prime": self.poly.p,
            "dimension": self.poly.N,
            "degree": self.poly.degree,
            "level": self.level,
            "alpha": self.alpha,
            "gamma": self.gamma,
            "c0": str(self.c0),
            "c1": str(self.c1),
            "reps": self.reps,
            "rechecked": self.rechecked,
        }


def certify_elliptic(poly: EllipticPolynomial, L: int = 2, alpha: float = 1.0) -> EllipticityCertificate:
    """Certify that ``|l|_p`` is bounded away from 0 on the unit sphere.

    Enumerates every unit class ``z mod p**L``.  If ``l(z) != 0 mod p**L`` for
    all of them, ``ord_p l`` is constant on each class (integer coefficients),
    which is the covering of the sphere used by the shell series.  The table
    is re-derived at level ``L+1`` as an independent consistency check.
    Raises :class:`NotCertified` with the first failing unit vector.
    """
    if L < 1:
        raise ValueError("certification level must be >= 1")
    p, N = poly.p, poly.N
    table = _ord_capped(poly.residues(L), p, L)
    units = _index_orders(p, N, L) == 0
    bad = np.flatnonzero(units & (table >= L))
    if bad.size:
        witness = np.unravel_index(int(bad[0]), (p**L,) * N)
        raise NotCertified(witness, L, p)
    rechecked = False
    if p ** ((L + 1) * N) <= RECHECK_LIMIT:
        fine = _ord_capped(poly.residues(L + 1), p, L + 1)
        idx = _indices(p, N, L + 1)
        coarse = np.ravel_multi_index(tuple((idx % p**L).T), (p**L,) * N)
        fine_units = _index_orders(p, N, L + 1) == 0
        if not np.array_equal(fine[fine_units], table[coarse[fine_units]]):
            raise AssertionError("ord table at level L+1 disagrees with level L")
        rechecked = True
    ord_table = np.where(units, table, -1).reshape((p**L,) * N)
    ord_table.setflags(write=False)
    return EllipticityCertificate(poly, L, ord_table, float(alpha), rechecked)


def z_alpha(poly: EllipticPolynomial, alpha: float, cert: EllipticityCertificate) -> float:
    """``int_{S_0^N} |l(z)|_p^alpha d^N z`` as a finite sum over the covering."""
    _check_cert(poly, cert)
    p, N, L = poly.p, poly.N, cert.level
    return float(np.sum(np.power(float(p), -alpha * cert.unit_ords))) * float(p) ** (-L * N)


def _check_cert(poly, cert):
    if cert.poly != poly:
        raise ValueError("certificate was issued for a different polynomial")


# -- symbols on frequency lattices -------------------------------------------

def _unit_parts(freq: Lattice, level: int):
    """For each frequency index ``n != 0``: ``o = ord(n)`` and the flat index of
    ``(n / p^o) mod p^level`` in the certificate table."""
    p, N = freq.p, freq.N
    n = freq.indices()
    o = freq.index_orders()
    nz = np.arange(n.shape[0]) != 0
    z = np.zeros_like(n)
    z[nz] = n[nz] // (p ** o[nz])[:, None]
    zL = np.ravel_multi_index(tuple((z % p**level).T), (p**level,) * N)
    return o, zL, z


def poly_abs_on_lattice(freq: Lattice, cert: EllipticityCertificate) -> np.ndarray:
    """``|l(xi)|_p`` at every frequency lattice point (0 at the origin)."""
    p, d = freq.p, cert.poly.degree
    o, zL, _ = _unit_parts(freq, cert.level)
    ordl = cert.ord_table.reshape(-1)[zL]
    out = np.power(float(p), d * (freq.j - o) - ordl.astype(float))
    out[0] = 0.0
    return out


def _resolvent(p, shell, d, alpha, m2, ords):
    """``1 / (p^(shell d alpha) |l(z)|^alpha + m^2)`` for unit ``z`` with ``ord l(z) = ords``."""
    return 1.0 / (np.power(float(p), shell * d * alpha - alpha * np.asarray(ords, float)) + m2)


def _class_means(values: np.ndarray, p: int, N: int, L: int, r: int) -> np.ndarray:
    """Mean of a level-``L`` table over the classes ``z mod p**r`` (``r < L``)."""
    shape = []
    for _ in range(N):
        shape += [p ** (L - r), p**r]
    arr = values.reshape(shape)
    return arr.mean(axis=tuple(range(0, 2 * N, 2)))


def resolvent_cell_average(freq: Lattice, alpha: float, m: float,
                           cert: EllipticityCertificate) -> np.ndarray:
    """Exact mean of ``1/(|l(xi)|^alpha + m^2)`` over each frequency cell."""
    p, N, d, L = freq.p, freq.N, cert.poly.degree, cert.level
    J, K = freq.j, freq.k
    m2 = float(m) ** 2
    o, zL, z = _unit_parts(freq, L)
    table = cert.ord_table.reshape(-1)
    out = np.empty(freq.npoints)
    for oval in np.unique(o[1:]):
        sel = np.flatnonzero(o == oval)
        sel = sel[sel != 0]
        shell = J - int(oval)
        depth = J + K - int(oval)  # cell of xi maps to z + p^depth Z_p^N
        if depth >= L:
            out[sel] = _resolvent(p, shell, d, alpha, m2, table[zL[sel]])
        else:
            safe = np.where(table >= 0, table, 0)
            h = _resolvent(p, shell, d, alpha, m2, safe).reshape((p**L,) * N)
            means = _class_means(h, p, N, L, depth)
            zr = np.ravel_multi_index(tuple((z[sel] % p**depth).T), (p**depth,) * N)
            out[sel] = means.reshape(-1)[zr]
    # origin cell: the ball B_{-K}, summed shell by shell
    ords, counts = np.unique(cert.unit_ords, return_counts=True)
    scale = float(p) ** (-L * N)
    total = 0.0
    shell = -K
    while True:
        w = float(p) ** ((shell + K) * N)
        if w < 1e-19:
            break
        total += w * scale * float(np.sum(counts * _resolvent(p, shell, d, alpha, m2, ords)))
        shell -= 1
    out[0] = total
    return out


@dataclass(frozen=True, eq=False)
class SmoothSymbol:
    """Positive frequency multiplier.

    ``evaluator(freq_lattice)`` returns the symbol at every point of the
    frequency lattice.  ``lower`` is the uniform lower bound ``C``; the growth
    constants satisfy ``c0g ||xi||^alpha <= a(xi) <= c1g ||xi||^alpha`` for
    ``||xi|| >= p**m0``.
    """

    evaluator: Callable[[Lattice], np.ndarray]
    lower: float
    c0g: float = 1.0
    c1g: float = 1.0
    alpha: float = 0.0
    m0: int = 0
    name: str = ""

    def on(self, freq: Lattice) -> np.ndarray:
        vals = np.asarray(self.evaluator(freq), dtype=float).reshape(-1)
        if vals.shape[0] != freq.npoints:
            raise LatticeMismatch("symbol evaluator returned the wrong number of values")
        if not np.all(vals > 0):
            raise ValueError(f"symbol {self.name or ''} is not positive on the lattice")
        return vals


def constant_symbol(c: float) -> SmoothSymbol:
    if not c > 0:
        raise ValueError("constant symbol must be positive")
    return SmoothSymbol(lambda fr: np.full(fr.npoints, float(c)), float(c), float(c), float(c), 0.0, 0, f"const({c})")


def bessel_symbol(alpha: float) -> SmoothSymbol:
    """``max(1, ||xi||_p)**alpha``."""
    return SmoothSymbol(lambda fr: np.maximum(1.0, fr.norms()) ** alpha, 1.0, 1.0, 1.0, alpha, 0,
                        f"max(1,|xi|)^{alpha}")


def klein_gordon_symbol(poly: EllipticPolynomial, alpha: float, m: float,
                        cert: EllipticityCertificate) -> SmoothSymbol:
    """``|l(xi)|^alpha + m^2``, discretized as the harmonic mean over each cell.

    With this discretization the lattice solution operator is exactly the
    cell-averaged resolvent, i.e. convolution with :func:`green_spectral`.
    """
    _check_cert(poly, cert)
    if not m > 0:
        raise ValueError("mass must be positive")
    d = poly.degree
    return SmoothSymbol(
        lambda fr: 1.0 / resolvent_cell_average(fr, alpha, m, cert),
        float(m) ** 2,
        float(cert.c0) ** alpha,
        float(cert.c1) ** alpha + float(m) ** 2,
        alpha * d,
        0,
        f"|{poly.literal()}|^{alpha}+{m}^2",
    )


def alt_klein_gordon_symbol(poly: EllipticPolynomial, alpha: float, m: float,
                            cert: EllipticityCertificate) -> SmoothSymbol:
    """``(|l(xi)|_p + m^2)**alpha`` sampled at the cell representatives."""
    _check_cert(poly, cert)
    if not m > 0:
        raise ValueError("mass must be positive")
    return SmoothSymbol(
        lambda fr: (poly_abs_on_lattice(fr, cert) + float(m) ** 2) ** alpha,
        float(m) ** (2 * alpha),
        float(cert.c0) ** alpha,
        (float(cert.c1) + float(m) ** 2) ** alpha,
        alpha * poly.degree,
        0,
        f"(|{poly.literal()}|+{m}^2)^{alpha}",
    )


def apply_multiplier(f: GridFn, values: np.ndarray, B: BilinearForm) -> GridFn:
    """``F^-1(values * F f)`` without any positivity requirement."""
    if f.tag != POSITION:
        raise LatticeMismatch("expected a position-tagged GridFn")
    fh = fourier_forward(f, B)
    return fourier_inverse(GridFn(fh.lattice, fh.values * values, FREQUENCY), B)


def apply_symbol(f: GridFn, a: SmoothSymbol, B: BilinearForm) -> GridFn:
    """``(A f)(x) = F^-1(a(xi) F f)``."""
    freq = f.lattice.dual(B.beta)
    return apply_multiplier(f, a.on(freq), B)


def invert_symbol(g: GridFn, a: SmoothSymbol, B: BilinearForm) -> GridFn:
    """Solve ``A u = g``: ``u = F^-1(F g / a)``."""
    freq = g.lattice.dual(B.beta)
    return apply_multiplier(g, 1.0 / a.on(freq), B)


def klein_gordon_solve(g: GridFn, poly: EllipticPolynomial, alpha: float, m: float,
                       B: BilinearForm, cert: EllipticityCertificate | None = None) -> GridFn:
    """Unique lattice solution of ``(L_alpha + m^2) u = g``."""
    if not m > 0:
        raise ValueError("mass must be positive")
    if cert is None:
        cert = certify_elliptic(poly)
    freq = g.lattice.dual(B.beta)
    return apply_multiplier(g, resolvent_cell_average(freq, alpha, m, cert), B)


# -- Green functions ----------------------------------------------------------

@dataclass(frozen=True, eq=False)
class GreenKernel:
    lattice: Lattice
    mass: float
    alpha: float
    poly: EllipticPolynomial
    values: GridFn
    origin_excluded: bool = True

    @property
    def real(self) -> np.ndarray:
        return self.values.values.real

    def off_origin(self) -> np.ndarray:
        return self.real[1:]

    def max_imag(self) -> float:
        return float(np.max(np.abs(self.values.values.imag)))

    def as_gridfn(self) -> GridFn:
        return GridFn(self.lattice, self.real)

    def header(self) -> dict:
        return {"m": self.mass, "alpha": self.alpha, "poly": self.poly.literal()}


def green_spectral(lat: Lattice, poly: EllipticPolynomial, alpha: float, m: float,
                   B: BilinearForm, cert: EllipticityCertificate | None = None) -> GreenKernel:
    """``G = F^-1(1/(|l|^alpha + m^2))`` on ``lat`` (cell averages of the true kernel)."""
    if not m > 0:
        raise ValueError("mass must be positive")
    if poly.N != lat.N or poly.p != lat.p:
        raise LatticeMismatch("polynomial does not match lattice")
    if cert is None:
        cert = certify_elliptic(poly)
    _check_cert(poly, cert)
    freq = lat.dual(B.beta)
    sym = GridFn(freq, resolvent_cell_average(freq, alpha, m, cert), FREQUENCY)
    G = fourier_inverse(sym, B)
    return GreenKernel(lat, float(m), float(alpha), poly, G)


@dataclass(frozen=True)
class SeriesValue:
    value: float
    tail_bound: float
    top_shell: int
    shells: int


def _pairing_data(x: PVector, B: BilinearForm):
    """Integers ``v`` and exponent ``e0`` with ``B(x, z) = p^e0 (v . z)``."""
    X, a = x.common_denominator()
    bt = B.reduced_int() if B.lattice_compatible else None
    if bt is None:
        raise LatticeMismatch("green_series needs a lattice-compatible bilinear form")
    v = [sum(int(bt[i, c]) * X[c] for c in range(len(X))) for i in range(len(X))]
    return v, B.beta - a


def _shell_sum(v, e0, shell, zs, h, p):
    """``sum_i h_i chi_p(-p^-shell B(x, z_i))``."""
    s = shell - e0  # p^-shell B(x,z) = (v . z) / p^s
    if s <= 0:
        return complex(np.sum(h))
    P = p**s
    w = np.array([vi % P for vi in v], dtype=np.int64)
    return kernels.phase_weighted_sum(zs, w, P, np.ascontiguousarray(h, dtype=float), -1)


def _series_core(V: np.ndarray, e0: int, ordv: np.ndarray, poly, alpha, m, cert, tol):
    """Shell series at many points ``x`` with ``B(x, z) = p^e0 (V[b] . z)``.

    Returns values, tail bounds, top shells and shell counts per point.
    """
    p, N, d, L = poly.p, poly.N, poly.degree, cert.level
    zs, ords = cert.representatives()
    M = zs.shape[0]
    m2 = float(m) ** 2
    scale = float(p) ** (-L * N)

    def bound(l):
        return M * scale * float(p) ** (l * N) / (m2 * (1.0 - float(p) ** (-N)))

    top = L + e0 + ordv
    # stop at the first shell (from the top) whose lower tail is below tol
    lc = int(max(top))
    while bound(lc - 1) >= tol:
        lc -= 1
    stop = np.minimum(top, lc)
    vals = np.zeros(V.shape[0])
    for shell in range(int(top.max()), int(stop.min()) - 1, -1):
        act = np.flatnonzero((top >= shell) & (stop <= shell))
        if act.size == 0:
            continue
        h = np.ascontiguousarray(_resolvent(p, shell, d, alpha, m2, ords))
        pref = float(p) ** (shell * N) * scale
        s = shell - e0  # p^-shell B(x, z) = (V . z) / p^s
        if s <= 0:
            vals[act] += pref * float(np.sum(h))
            continue
        P = p**s
        W, inv = np.unique(V[act] % P, axis=0, return_inverse=True)
        sums = kernels.phase_weighted_sum_batch(zs, np.ascontiguousarray(W, dtype=np.int64), P, h, -1)
        vals[act] += pref * sums.real[inv.reshape(-1)]
    tails = np.array([bound(int(l) - 1) for l in stop])
    return vals, tails, top, top - stop + 1


def green_series(x: PVector, poly: EllipticPolynomial, alpha: float, m: float, B: BilinearForm,
                 cert: EllipticityCertificate, tol: float = 1e-8) -> SeriesValue:
    """Shell series for ``G(x; m, alpha)`` at ``x != 0``.

    Shells above ``L + ord(B x)`` vanish identically; the lower range is cut
    where the geometric majorant ``M p^(lN-LN) / m^2`` summed over the
    remaining shells falls below ``tol``.
    """
    _check_cert(poly, cert)
    if x.is_zero():
        raise ValueError("the shell series is only defined off the origin")
    if not m > 0:
        raise ValueError("mass must be positive")
    v, e0 = _pairing_data(x, B)
    ordv = np.array([min(ord_int(vi, poly.p) for vi in v)])
    # phases only need v mod p^(L + ord v), the modulus of the top shell
    smax = poly.p ** (cert.level + int(ordv[0]))
    V = np.array([[vi % smax for vi in v]], dtype=np.int64)
    vals, tails, top, count = _series_core(V, e0, ordv, poly, alpha, m, cert, tol)
    return SeriesValue(float(vals[0]), float(tails[0]), int(top[0]), int(count[0]))


def green_series_lattice(lat: Lattice, poly: EllipticPolynomial, alpha: float, m: float,
                         B: BilinearForm, cert: EllipticityCertificate,
                         tol: float = 1e-8) -> tuple[np.ndarray, np.ndarray]:
    """:func:`green_series` at every lattice point; the origin entry is NaN."""
    _check_cert(poly, cert)
    if not m > 0:
        raise ValueError("mass must be positive")
    if poly.N != lat.N or poly.p != lat.p:
        raise LatticeMismatch("polynomial does not match lattice")
    if not B.lattice_compatible:
        raise LatticeMismatch("green_series needs a lattice-compatible bilinear form")
    V = lat.indices()[1:] @ B.reduced_int().T
    ordv = lat.index_orders()[1:]  # B~ is unimodular, so ord(B~ m) = ord(m)
    vals, tails, _, _ = _series_core(V, B.beta - lat.j, ordv, poly, alpha, m, cert, tol)
    return np.concatenate([[np.nan], vals]), np.concatenate([[np.nan], tails])


def shell_term(x: PVector, shell: int, poly: EllipticPolynomial, alpha: float, m: float,
               B: BilinearForm, cert: EllipticityCertificate) -> float:
    """``g^(shell)(x)`` by brute-force enumeration at a level fine enough that the
    character is constant on every class; independent of the vanishing rule."""
    _check_cert(poly, cert)
    p, N, d, L = poly.p, poly.N, poly.degree, cert.level
    v, e0 = _pairing_data(x, B)
    level = max(L, shell - e0)
    if p ** (level * N) > 5_000_000:
        raise ValueError(f"shell {shell} needs level {level}: enumeration too large")
    table = _ord_capped(poly.residues(level), p, level)
    units = _index_orders(p, N, level) == 0
    zs = np.ascontiguousarray(_indices(p, N, level)[units])
    h = _resolvent(p, shell, d, alpha, float(m) ** 2, table[units])
    return float(p) ** (shell * N - level * N) * _shell_sum(v, e0, shell, zs, h, p).real


# -- decay exponents ----------------------------------------------------------

@dataclass(frozen=True)
class DecayFit:
    regime: str
    slope: float
    expected: float
    shells: tuple
    continuous: bool

    @property
    def rel_error(self) -> float:
        if self.expected == 0:
            return abs(self.slope)
        return abs(self.slope - self.expected) / abs(self.expected)


def shell_profile(G: GreenKernel) -> tuple[np.ndarray, np.ndarray]:
    """Mean of ``G`` over each resolved sphere ``||x|| = p^e`` (origin excluded)."""
    e = G.lattice.norm_exponents()[1:]
    vals = G.off_origin()
    shells = np.unique(e)
    means = np.array([vals[e == s].mean() for s in shells])
    return shells, means


def decay_fit(G: GreenKernel, regime: str, min_shells: int = 4) -> DecayFit:
    """Least-squares slope of ``log G`` against ``log ||x||`` over shell means.

    ``near_zero`` uses the shells inside the unit ball, ``infinity`` those
    outside it.
    """
    shells, means = shell_profile(G)
    if regime == "near_zero":
        sel = shells <= 0
    elif regime == "infinity":
        sel = shells >= 1
    else:
        raise ValueError(f"unknown regime {regime!r}")
    if int(np.sum(sel)) < min_shells:
        raise ValueError(f"only {int(np.sum(sel))} resolved shells in regime {regime}")
    if np.any(means[sel] <= 0):
        raise ValueError("non-positive shell mean; cannot fit a power law")
    p = G.lattice.p
    xs = shells[sel] * math.log(p)
    slope = float(np.polyfit(xs, np.log(means[sel]), 1)[0])
    ad, N = G.alpha * G.poly.degree, G.lattice.N
    if regime == "infinity":
        expected = -(ad + N)
    else:
        expected = ad - N if ad < N else 0.0
    return DecayFit(regime, slope, float(expected), tuple(int(s) for s in shells[sel]), ad > N)

"""Finite-resolution model of Q_p^N.

A :class:`Lattice` ``(p, N, j, k)`` describes functions supported in the ball
``B_j^N`` (radius ``p**j``) and constant on cosets of ``B_{-k}^N``.  The point
with index vector ``m`` in ``[0, p**(j+k))^N`` is ``x = m * p**(-j)``; flat
indices are row-major over ``m``.  Because ``B_j^N`` is an additive group,
differences of lattice points stay on the lattice and convolutions are exact
cyclic convolutions over ``(Z/p^(j+k))^N``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import kernels
from .padic import PRational, PVector, is_prime, ord_int

POSITION = "position"
FREQUENCY = "frequency"


class LatticeMismatch(ValueError):
    pass


@dataclass(frozen=True)
class Lattice:
    p: int
    N: int
    j: int
    k: int

    def __post_init__(self):
        if not is_prime(self.p):
            raise ValueError(f"p={self.p} is not prime")
        if self.N < 1:
            raise ValueError("dimension N must be >= 1")
        if self.j < 0 or self.k < 0:
            raise ValueError(f"lattice exponents must be >= 0, got j={self.j}, k={self.k}")

    @property
    def side(self) -> int:
        return self.p ** (self.j + self.k)

    @property
    def shape(self) -> tuple:
        return (self.side,) * self.N

    @property
    def npoints(self) -> int:
        return self.side**self.N

    @property
    def cell_volume(self) -> float:
        return float(self.p) ** (-self.k * self.N)

    def dual(self, beta: int = 0) -> "Lattice":
        """Frequency lattice for a bilinear form with scale exponent ``beta``."""
        jd, kd = self.k + beta, self.j - beta
        if jd < 0 or kd < 0:
            raise LatticeMismatch(
                f"dual lattice exponents ({jd}, {kd}) negative for beta={beta}")
        return Lattice(self.p, self.N, jd, kd)

    # -- index geometry -----------------------------------------------------
    def indices(self) -> np.ndarray:
        """Integer index vectors, shape ``(npoints, N)``, row-major."""
        return _indices(self.p, self.N, self.j + self.k)

    def index_orders(self) -> np.ndarray:
        """``ord_p`` of each index vector ``m``; ``j+k`` stands in for the zero vector."""
        return _index_orders(self.p, self.N, self.j + self.k)

    def norm_exponents(self) -> np.ndarray:
        """``e`` with ``||x||_p = p**e``; the origin cell (the ball ``B_{-k}``) gets ``-k``."""
        return self.j - self.index_orders()

    def norms(self) -> np.ndarray:
        e = self.norm_exponents().astype(float)
        out = np.power(float(self.p), e)
        out[0] = 0.0
        return out

    def neg_index(self) -> np.ndarray:
        """Flat index of ``-x`` for every point ``x``."""
        m = (-self.indices()) % self.side
        return np.ravel_multi_index(tuple(m.T), self.shape)

    def flat_index(self, m: Sequence[int]) -> int:
        m = [int(v) % self.side for v in m]
        return int(np.ravel_multi_index(tuple(m), self.shape))

    def point(self, flat: int) -> PVector:
        m = np.unravel_index(int(flat), self.shape)
        return PVector(tuple(PRational(int(v), self.j, self.p) for v in m))

    def index_of(self, x: PVector) -> int:
        """Flat index of the cell containing ``x`` (``x`` must lie in ``B_j``)."""
        if x.prime != self.p or x.dim != self.N:
            raise LatticeMismatch("point does not match lattice prime/dimension")
        m = []
        for c in x.coords:
            if c.num != 0 and c.order < -self.j:
                raise LatticeMismatch(f"{x} lies outside B_{self.j}")
            scaled = c.scale(self.j)
            if scaled.kexp:
                raise LatticeMismatch(f"{x} is not a lattice point")
            m.append(scaled.num % self.side)
        return self.flat_index(m)

    # -- standard functions ---------------------------------------------------
    def ball(self, e: int, center: Sequence[int] | None = None) -> "GridFn":
        """Indicator of ``||x - c||_p <= p**e``; ``center`` is an index vector."""
        if e < -self.k:
            raise LatticeMismatch(f"ball of radius p^{e} is below resolution k={self.k}")
        idx = self.indices()
        if center is not None:
            idx = (idx - np.asarray(center, dtype=np.int64)) % self.side
        ords = _orders_of(idx, self.p, self.j + self.k)
        vals = (self.j - ords <= e).astype(complex)
        return GridFn(self, vals)

    def sphere(self, e: int) -> "GridFn":
        if e <= -self.k:
            raise LatticeMismatch(f"sphere of radius p^{e} is not resolved (k={self.k})")
        return GridFn(self, (self.norm_exponents() == e).astype(complex))

    def omega(self) -> "GridFn":
        """Indicator of ``Z_p^N``."""
        return self.ball(0)

    def constant(self, c: complex = 1.0) -> "GridFn":
        return GridFn(self, np.full(self.npoints, c, dtype=complex))

    def delta(self) -> "GridFn":
        """Point mass at the origin: height ``p**(kN)`` on the origin cell."""
        vals = np.zeros(self.npoints, dtype=complex)
        vals[0] = float(self.p) ** (self.k * self.N)
        return GridFn(self, vals)

    def zeros(self) -> "GridFn":
        return GridFn(self, np.zeros(self.npoints, dtype=complex))


_IDX_CACHE: dict = {}


def _indices(p, N, n):
    key = ("idx", p, N, n)
    if key not in _IDX_CACHE:
        side = p**n
        arr = np.stack(np.unravel_index(np.arange(side**N), (side,) * N), axis=1).astype(np.int64)
        arr.setflags(write=False)
        _IDX_CACHE[key] = arr
    return _IDX_CACHE[key]


def _index_orders(p, N, n):
    key = ("ord", p, N, n)
    if key not in _IDX_CACHE:
        arr = _orders_of(_indices(p, N, n), p, n)
        arr.setflags(write=False)
        _IDX_CACHE[key] = arr
    return _IDX_CACHE[key]


def _orders_of(idx, p, n):
    """Min p-adic order over coordinates of integer vectors, capped at ``n``."""
    ords = np.full(idx.shape[0], n, dtype=np.int64)
    rem = idx.copy()
    for e in range(n):
        nz = np.any(rem % p != 0, axis=1) & (ords == n)
        ords[nz] = e
        rem = rem // p
    return ords


@dataclass(frozen=True, eq=False)
class GridFn:
    """Complex values on a :class:`Lattice`, tagged as position or frequency."""

    lattice: Lattice
    values: np.ndarray
    tag: str = POSITION

    def __post_init__(self):
        vals = np.array(self.values, dtype=complex).reshape(-1)
        if vals.shape[0] != self.lattice.npoints:
            raise LatticeMismatch(
                f"{vals.shape[0]} values for a lattice of {self.lattice.npoints} points")
        if self.tag not in (POSITION, FREQUENCY):
            raise ValueError(f"unknown domain tag {self.tag!r}")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def grid(self) -> np.ndarray:
        return self.values.reshape(self.lattice.shape)

    def _same(self, other: "GridFn"):
        if other.lattice != self.lattice or other.tag != self.tag:
            raise LatticeMismatch("GridFn operands live on different lattices or domains")

    def with_values(self, values) -> "GridFn":
        return GridFn(self.lattice, values, self.tag)

    def __add__(self, other):
        if isinstance(other, GridFn):
            self._same(other)
            return self.with_values(self.values + other.values)
        return self.with_values(self.values + other)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, GridFn):
            self._same(other)
            return self.with_values(self.values - other.values)
        return self.with_values(self.values - other)

    def __neg__(self):
        return self.with_values(-self.values)

    def __mul__(self, other):
        if isinstance(other, GridFn):
            self._same(other)
            return self.with_values(self.values * other.values)
        return self.with_values(self.values * other)

    __rmul__ = __mul__

    def __truediv__(self, c):
        return self.with_values(self.values / c)

    def conj(self) -> "GridFn":
        return self.with_values(np.conj(self.values))

    def reflect(self) -> "GridFn":
        """``x -> f(-x)``."""
        return self.with_values(self.values[self.lattice.neg_index()])

    def is_real(self, tol: float = 1e-10) -> bool:
        return bool(np.max(np.abs(self.values.imag), initial=0.0) <= tol)

    def at(self, m: Sequence[int]) -> complex:
        return complex(self.values[self.lattice.flat_index(m)])


def random_gridfn(lat: Lattice, rng: np.random.Generator, real: bool = False) -> GridFn:
    vals = rng.normal(size=lat.npoints)
    if not real:
        vals = vals + 1j * rng.normal(size=lat.npoints)
    return GridFn(lat, vals)


# -- bilinear forms -----------------------------------------------------------

def _as_prational(v, p):
    if isinstance(v, PRational):
        return v
    if isinstance(v, str):
        return PRational.parse(v, p)
    return PRational.from_fraction(Fraction(v), p)


def _fraction_det(rows):
    """Exact determinant by fraction-valued Gaussian elimination."""
    a = [list(r) for r in rows]
    n = len(a)
    det = Fraction(1)
    for c in range(n):
        piv = next((r for r in range(c, n) if a[r][c] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != c:
            a[c], a[piv] = a[piv], a[c]
            det = -det
        det *= a[c][c]
        for r in range(c + 1, n):
            f = a[r][c] / a[c][c]
            if f:
                for cc in range(c, n):
                    a[r][cc] -= f * a[c][cc]
    return det


@dataclass(frozen=True, eq=False)
class BilinearForm:
    """Symmetric non-degenerate form ``B(x, y) = x^T [B] y`` with p-rational entries.

    ``beta`` is the order of the matrix viewed as a vector of ``N**2`` entries,
    ``cq = |det B|_p**(1/2)`` is the self-dual normalization.  Fourier
    transforms on uniform lattices additionally need the rescaled matrix
    ``p**(-beta) [B]`` to be invertible over ``Z_p`` (``lattice_compatible``).
    """

    matrix: tuple
    prime: int
    _probe: bool = field(default=True, repr=False)

    def __post_init__(self):
        p = self.prime
        rows = tuple(tuple(_as_prational(v, p) for v in row) for row in self.matrix)
        n = len(rows)
        if n == 0 or any(len(r) != n for r in rows):
            raise ValueError("bilinear form matrix must be square")
        for i in range(n):
            for c in range(n):
                if rows[i][c] != rows[c][i]:
                    raise ValueError("bilinear form matrix must be symmetric")
        det = _fraction_det([[e.to_fraction() for e in r] for r in rows])
        if det == 0:
            raise ValueError("bilinear form is degenerate (det = 0)")
        object.__setattr__(self, "matrix", rows)
        object.__setattr__(self, "det", det)
        beta = min(e.order for r in rows for e in r)
        object.__setattr__(self, "beta", int(beta))
        det_ord = ord_int(det.numerator, p) - ord_int(det.denominator, p)
        object.__setattr__(self, "det_order", det_ord)
        object.__setattr__(self, "cq", float(p) ** (-det_ord / 2.0))
        # reduced matrix p^-beta [B] is integral; unimodular iff det order == N*beta
        object.__setattr__(self, "lattice_compatible", det_ord == n * beta)
        if self.lattice_compatible and self._probe:
            _probe_self_duality(self)

    @classmethod
    def standard(cls, p: int, N: int) -> "BilinearForm":
        eye = tuple(tuple(1 if i == c else 0 for c in range(N)) for i in range(N))
        return cls(eye, p)

    @classmethod
    def diagonal(cls, p: int, diag: Sequence) -> "BilinearForm":
        n = len(diag)
        return cls(tuple(tuple(diag[i] if i == c else 0 for c in range(n)) for i in range(n)), p)

    @property
    def N(self) -> int:
        return len(self.matrix)

    def fraction_matrix(self):
        return [[e.to_fraction() for e in r] for r in self.matrix]

    def reduced_int(self) -> np.ndarray:
        """``p**(-beta) [B]`` as an int64 matrix."""
        out = np.empty((self.N, self.N), dtype=np.int64)
        for i, r in enumerate(self.matrix):
            for c, e in enumerate(r):
                s = e.scale(-self.beta)
                assert s.kexp == 0
                out[i, c] = s.num
        return out

    def __call__(self, x: PVector, y: PVector) -> PRational:
        acc = PRational(0, 0, self.prime)
        for i in range(self.N):
            for c in range(self.N):
                if self.matrix[i][c].num:
                    acc = acc + x[i] * self.matrix[i][c] * y[c]
        return acc

    def q(self, x: PVector) -> PRational:
        return self(x, x)


def _probe_self_duality(B: BilinearForm):
    """Refuse forms whose ``cq`` does not make the double transform a reflection."""
    jp = max(B.beta, 0)
    kp = max(-B.beta, 0) + 1
    if B.N * (jp + kp) * math.log(B.prime) > math.log(5000):
        jp, kp = max(B.beta, 0), max(-B.beta, 0)
    lat = Lattice(B.prime, B.N, jp, kp)
    if lat.npoints > 200_000:
        return
    f = random_gridfn(lat, np.random.default_rng(7))
    back = _transform(_transform(f.values, lat, B, +1)[0], lat.dual(B.beta), B, +1)[0]
    err = np.max(np.abs(back - f.reflect().values))
    if not err < 1e-10:
        raise ValueError(f"C(q)={B.cq} fails the self-duality probe (error {err:.3e})")


# -- Fourier transform --------------------------------------------------------

def _transform(values, lat: Lattice, B: BilinearForm, sign: int, method: str = "fft"):
    """Character sum ``sum_m v_m chi(sign B(x_m, xi_n)) * cq * p^(-kN)`` on the dual lattice."""
    if not B.lattice_compatible:
        raise LatticeMismatch(
            "bilinear form is not unimodular up to a power of p; "
            "its Fourier transform has no uniform dual lattice")
    if B.N != lat.N or B.prime != lat.p:
        raise LatticeMismatch("bilinear form does not match lattice dimension/prime")
    dual = lat.dual(B.beta)
    side, N = lat.side, lat.N
    bt = B.reduced_int()
    scale = B.cq * lat.cell_volume
    if method == "direct":
        out = kernels.char_sum_dft(np.ascontiguousarray(values, dtype=complex), side, N, bt, sign)
    elif method == "fft":
        grid = np.asarray(values, dtype=complex).reshape(lat.shape)
        if sign > 0:
            D = np.fft.ifftn(grid) * float(side) ** N
        else:
            D = np.fft.fftn(grid)
        if np.array_equal(bt, np.eye(N, dtype=np.int64)):
            out = D.reshape(-1)
        else:
            w = (lat.indices() @ bt.T) % side
            out = D[tuple(w.T)]
    else:
        raise ValueError(f"unknown transform method {method!r}")
    return np.asarray(out) * scale, dual


def fourier_forward(f: GridFn, B: BilinearForm, method: str = "fft") -> GridFn:
    """``(Ff)(xi) = int f(x) chi_p(B(x, xi)) dmu(x)`` with ``dmu = C(q) d^N x``."""
    if f.tag != POSITION:
        raise LatticeMismatch("fourier_forward expects a position-tagged GridFn")
    vals, dual = _transform(f.values, f.lattice, B, +1, method)
    return GridFn(dual, vals, FREQUENCY)


def fourier_inverse(h: GridFn, B: BilinearForm, method: str = "fft") -> GridFn:
    """Inverse transform: kernel ``chi_p(-B(x, xi))``, i.e. forward then reflection."""
    if h.tag != FREQUENCY:
        raise LatticeMismatch("fourier_inverse expects a frequency-tagged GridFn")
    vals, lat = _transform(h.values, h.lattice, B, -1, method)
    return GridFn(lat, vals, POSITION)


def haar_integral(f: GridFn) -> complex:
    """``int f(x) d^N x`` with ``vol(Z_p^N) = 1``."""
    if f.tag != POSITION:
        raise LatticeMismatch("haar_integral expects a position-tagged GridFn")
    return complex(np.sum(f.values) * f.lattice.cell_volume)


def frequency_integral(h: GridFn) -> complex:
    """``int h(xi) d^N xi`` over the frequency lattice (plain Haar measure)."""
    if h.tag != FREQUENCY:
        raise LatticeMismatch("frequency_integral expects a frequency-tagged GridFn")
    return complex(np.sum(h.values) * h.lattice.cell_volume)


def convolve(a: GridFn, b: GridFn) -> GridFn:
    """``(a * b)(x) = int a(x - y) b(y) d^N y``, exact on ``B_j``."""
    if a.lattice != b.lattice or a.tag != POSITION or b.tag != POSITION:
        raise LatticeMismatch("convolution needs two position GridFns on one lattice")
    lat = a.lattice
    out = np.fft.ifftn(np.fft.fftn(a.grid) * np.fft.fftn(b.grid)) * lat.cell_volume
    return GridFn(lat, out.reshape(-1))


# -- Sobolev-type norms -------------------------------------------------------

@dataclass(frozen=True)
class SobolevParams:
    alpha: float
    level: int

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")


def sobolev_weight(freq: Lattice, sp: SobolevParams) -> np.ndarray:
    """``max(1, ||xi||_p)**(2 alpha l)`` on a frequency lattice."""
    return np.maximum(1.0, freq.norms()) ** (2.0 * sp.alpha * sp.level)


def sobolev_inner(f: GridFn, g: GridFn, sp: SobolevParams, B: BilinearForm) -> complex:
    if f.lattice != g.lattice:
        raise LatticeMismatch("sobolev_inner needs both functions on the same lattice")
    fh, gh = fourier_forward(f, B), fourier_forward(g, B)
    w = sobolev_weight(fh.lattice, sp)
    return complex(np.sum(w * fh.values * np.conj(gh.values)) * fh.lattice.cell_volume)


def sobolev_norm(f: GridFn, sp: SobolevParams, B: BilinearForm) -> float:
    return math.sqrt(max(sobolev_inner(f, f, sp, B).real, 0.0))


def sobolev_metric(f: GridFn, g: GridFn, alpha: float, lmax: int, B: BilinearForm) -> float:
    """``max_{0<=l<=lmax} 2^-l ||f-g||_l / (1 + ||f-g||_l)``."""
    if lmax < 0:
        raise ValueError("lmax must be >= 0")
    if f.lattice != g.lattice:
        raise LatticeMismatch("sobolev_metric needs both functions on the same lattice")
    diff = f - g
    dh = fourier_forward(diff, B)
    power = np.abs(dh.values) ** 2 * dh.lattice.cell_volume
    norms = np.maximum(1.0, dh.lattice.norms())
    best = 0.0
    for level in range(lmax + 1):
        nl = math.sqrt(float(np.sum(norms ** (2.0 * alpha * level) * power)))
        best = max(best, 2.0**-level * nl / (1.0 + nl))
    return best


# -- exact character integrals ------------------------------------------------

def _cyclotomic_value(counts: Sequence[int], p: int, e: int) -> Fraction:
    """Exact value of ``sum_r counts[r] * zeta^r`` with ``zeta = exp(2 pi i / p^e)``.

    Reduces modulo the cyclotomic polynomial ``Phi_{p^e}``; raises if the
    result is not rational.
    """
    c = [int(v) for v in counts]
    if e == 0:
        return Fraction(sum(c))
    step = p ** (e - 1)
    phi_deg = step * (p - 1)
    # x^(phi_deg + t) = -sum_{i<p-1} x^(i*step + t)
    for deg in range(len(c) - 1, phi_deg - 1, -1):
        v = c[deg]
        if v:
            c[deg] = 0
            t = deg - phi_deg
            for i in range(p - 1):
                c[i * step + t] -= v
    if any(c[1:phi_deg]):
        raise ArithmeticError("character sum is not rational")
    return Fraction(c[0])


def character_integral(lat: Lattice, e: int, u: Sequence[int]) -> Fraction:
    """Exact lattice value of ``int_{Z_p^N} chi_p(p^-e u . y) d^N y``.

    ``u`` is an integer vector; the integrand must be resolved (``e <= k``).
    """
    p, N = lat.p, lat.N
    if len(u) != N:
        raise LatticeMismatch("u must have N coordinates")
    if e > lat.k:
        raise LatticeMismatch(f"exponent e={e} is finer than the resolution k={lat.k}")
    # lattice points of Z_p^N: y = m' with m' in [0, p^k)^N  (m = p^j m')
    npts = p ** (lat.k * N)
    if e <= 0:
        total = Fraction(npts)
    else:
        sub = _indices(p, N, lat.k)
        r = (sub @ np.asarray(u, dtype=np.int64)) % p**e
        counts = np.bincount(r, minlength=p**e)
        total = _cyclotomic_value(counts, p, e)
    return total * Fraction(p) ** (-lat.k * N)


# -- CSV serialization --------------------------------------------------------

def _header_tokens(line: str) -> dict:
    out = {}
    for tok in line.lstrip("#").split():
        key, _, val = tok.partition("=")
        out[key] = val
    return out


def write_csv(f: GridFn, path, extra: dict | None = None) -> None:
    lat = f.lattice
    lines = [f"# p={lat.p} N={lat.N} j={lat.j} k={lat.k} tag={f.tag}"]
    if extra:
        lines.append("# " + " ".join(f"{k}={str(v).replace(' ', '')}" for k, v in extra.items()))
    cols = [f"index_{i}" for i in range(lat.N)] + ["re", "im"]
    lines.append(",".join(cols))
    idx = lat.indices()
    for row, v in zip(idx, f.values):
        lines.append(",".join(str(int(c)) for c in row) + f",{float(v.real)!r},{float(v.imag)!r}")
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_csv(path) -> tuple[GridFn, dict]:
    """Read a GridFn; returns it with any extra header fields."""
    with open(path) as fh:
        text = fh.read().splitlines()
    head = _header_tokens(text[0])
    lat = Lattice(int(head["p"]), int(head["N"]), int(head["j"]), int(head["k"]))
    extra = {}
    pos = 1
    while text[pos].startswith("#"):
        extra.update(_header_tokens(text[pos]))
        pos += 1
    pos += 1  # column names
    vals = np.zeros(lat.npoints, dtype=complex)
    for line in text[pos:]:
        if not line.strip():
            continue
        parts = line.split(",")
        idx = [int(v) for v in parts[: lat.N]]
        vals[lat.flat_index(idx)] = complex(float(parts[lat.N]), float(parts[lat.N + 1]))
    return GridFn(lat, vals, head["tag"]), extra

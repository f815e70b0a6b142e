"""Levy white noise on a lattice and the convolved field ``Phi = G * noise``.

A cell of volume ``v`` receives the increment

    X = v (a - sum_i lam_i s_i / (1 + s_i^2)) + Normal(0, sigma^2 v) + sum_i s_i Poisson(v lam_i)

whose characteristic function is ``exp(v Psi(t))``.

Randomness is counter based: draws are made in fixed chunks of
:data:`CHUNK` items, and chunk ``c`` of stream ``s`` comes from a Philox
generator keyed by the seed with counter ``(0, 0, c, s)``.  Any item can be
regenerated on its own and results do not depend on how chunks are scheduled.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .lattice import POSITION, GridFn, Lattice, LatticeMismatch, convolve, haar_integral

CHUNK = 256

# stream ids; the sample index is added to a base so streams never collide
_NOISE_STREAM = 0
_SHEET_STREAM = 1 << 62


@dataclass(frozen=True)
class LevyTriple:
    """Drift ``a``, Gaussian part ``sigma`` and finitely many jump atoms ``(s, lam)``."""

    a: float = 0.0
    sigma: float = 0.0
    atoms: tuple = ()

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError("sigma must be non-negative")
        atoms = tuple((float(s), float(lam)) for s, lam in self.atoms)
        for s, lam in atoms:
            if s == 0:
                raise ValueError("jump sizes must be non-zero")
            if not lam > 0:
                raise ValueError("jump intensities must be positive")
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "a", float(self.a))
        object.__setattr__(self, "sigma", float(self.sigma))

    @classmethod
    def gaussian(cls, sigma: float = 1.0) -> "LevyTriple":
        return cls(0.0, sigma, ())

    @property
    def is_gaussian(self) -> bool:
        return not self.atoms

    def compensated_drift(self) -> float:
        return self.a - sum(lam * s / (1.0 + s * s) for s, lam in self.atoms)


def psi_eval(t, L: LevyTriple):
    """Levy characteristic ``Psi(t)``; ``t`` may be a scalar or an array."""
    t = np.asarray(t, dtype=float)
    out = 1j * L.a * t - 0.5 * L.sigma**2 * t * t
    for s, lam in L.atoms:
        out = out + lam * (np.exp(1j * s * t) - 1.0 - 1j * s * t / (1.0 + s * s))
    return complex(out) if out.ndim == 0 else out


def char_functional(f: GridFn, L: LevyTriple) -> complex:
    """``exp(int Psi(f(x)) d^N x)``; exact since ``f`` is constant on cells."""
    if f.tag != POSITION:
        raise LatticeMismatch("expected a position-tagged GridFn")
    if not f.is_real():
        raise ValueError("char_functional needs a real test function")
    psi = psi_eval(f.values.real, L)
    return complex(np.exp(np.sum(psi) * f.lattice.cell_volume))


def moment_constants(L: LevyTriple, mmax: int) -> list[float]:
    """``[c_1, ..., c_mmax]``: the cumulants per unit volume of the noise."""
    if mmax < 1:
        raise ValueError("mmax must be >= 1")
    out = []
    for m in range(1, mmax + 1):
        if m == 1:
            c = L.a + sum(lam * s**3 / (1.0 + s * s) for s, lam in L.atoms)
        elif m == 2:
            c = L.sigma**2 + sum(lam * s * s for s, lam in L.atoms)
        else:
            c = sum(lam * s**m for s, lam in L.atoms)
        out.append(float(c))
    return out


def _chunk_rng(seed: int, chunk: int, stream: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=int(seed), counter=[0, 0, int(chunk), int(stream)]))


def _draw_chunk(rng: np.random.Generator, n: int, L: LevyTriple, v: float) -> np.ndarray:
    x = np.full(n, v * L.compensated_drift())
    if L.sigma > 0:
        x += rng.normal(0.0, L.sigma * math.sqrt(v), n)
    for s, lam in L.atoms:
        x += s * rng.poisson(v * lam, n)
    return x


def sample_increments(L: LevyTriple, v: float, n: int, seed: int, stream: int = 0,
                      threads: int = 1) -> np.ndarray:
    """``n`` independent increments of a cell of volume ``v``.

    Item ``i`` depends only on ``(seed, stream, i)``, whatever ``threads`` is.
    """
    if n < 0:
        raise ValueError("n must be non-negative")
    nchunks = -(-n // CHUNK)
    out = np.empty(nchunks * CHUNK)

    def fill(c):
        out[c * CHUNK:(c + 1) * CHUNK] = _draw_chunk(_chunk_rng(seed, c, _NOISE_STREAM + stream), CHUNK, L, v)

    if threads > 1 and nchunks > 1:
        with ThreadPoolExecutor(threads) as ex:
            list(ex.map(fill, range(nchunks)))
    else:
        for c in range(nchunks):
            fill(c)
    return out[:n]


@dataclass(frozen=True, eq=False)
class NoiseSample:
    """One realization of the noise paired with every cell indicator."""

    lattice: Lattice
    increments: np.ndarray

    def __post_init__(self):
        inc = np.asarray(self.increments, dtype=float).reshape(-1)
        if inc.shape[0] != self.lattice.npoints:
            raise LatticeMismatch("one increment per cell is required")
        inc.setflags(write=False)
        object.__setattr__(self, "increments", inc)

    def density(self) -> GridFn:
        return GridFn(self.lattice, self.increments / self.lattice.cell_volume)

    def pair(self, f: GridFn) -> float:
        """``<f, noise>`` for a real test function resolved by the lattice."""
        if f.lattice != self.lattice:
            raise LatticeMismatch("test function lives on another lattice")
        return float(np.dot(f.values.real, self.increments))


def sample_noise(lat: Lattice, L: LevyTriple, seed: int, index: int = 0, threads: int = 1) -> NoiseSample:
    """Realization number ``index`` of the white noise on ``lat``."""
    return NoiseSample(lat, sample_increments(L, lat.cell_volume, lat.npoints, seed, index, threads))


def sample_noise_batch(lat: Lattice, L: LevyTriple, seed: int, start: int, count: int) -> np.ndarray:
    """Increments of realizations ``start .. start+count-1`` as a ``(count, npoints)`` array.

    Row ``r`` equals ``sample_noise(lat, L, seed, start + r).increments``.
    """
    return np.stack([sample_increments(L, lat.cell_volume, lat.npoints, seed, start + r)
                     for r in range(count)]) if count else np.empty((0, lat.npoints))


@dataclass(frozen=True, eq=False)
class FieldSample:
    lattice: Lattice
    values: np.ndarray

    def as_gridfn(self) -> GridFn:
        return GridFn(self.lattice, self.values)

    def pair(self, f: GridFn) -> float:
        """``Phi(f) = int phi(x) f(x) d^N x``."""
        return float(haar_integral(GridFn(self.lattice, self.values * f.values.real)).real)


def _kernel_gridfn(G) -> GridFn:
    return G.as_gridfn() if hasattr(G, "as_gridfn") else G


def sample_field(noise: NoiseSample, G, B=None) -> FieldSample:
    """Density of ``Phi = G * noise``: the lattice convolution of ``G`` with
    ``increments / cell_volume``.  ``B`` is accepted for symmetry with the other
    pipelines; the convolution does not depend on it."""
    g = _kernel_gridfn(G)
    if g.lattice != noise.lattice:
        raise LatticeMismatch("Green kernel and noise live on different lattices")
    phi = convolve(g, noise.density())
    return FieldSample(noise.lattice, phi.values.real.copy())


def smeared_kernel(G, f: GridFn) -> np.ndarray:
    """Weights ``w`` with ``Phi(f) = sum_cells w * increment`` for every sample.

    ``w(y) = int G(x - y) f(x) dx``, i.e. the reflected kernel convolved with ``f``.
    """
    g = _kernel_gridfn(G)
    if g.lattice != f.lattice:
        raise LatticeMismatch("Green kernel and test function live on different lattices")
    return convolve(g.reflect(), f).values.real.copy()


def field_pairings(fs, G, L: LevyTriple, nsamples: int, seed: int, batch: int = 4096) -> np.ndarray:
    """``Phi_s(f)`` for every sample ``s < nsamples`` and test function ``f``; shape ``(nsamples, len(fs))``."""
    if nsamples < 1:
        raise ValueError("nsamples must be >= 1")
    W = np.stack([smeared_kernel(G, f) for f in fs], axis=1) if fs else None
    lat = fs[0].lattice
    out = np.empty((nsamples, len(fs)))
    # draw all increments of all samples as one counter range per sample
    for start in range(0, nsamples, batch):
        cnt = min(batch, nsamples - start)
        X = sample_noise_batch(lat, L, seed, start, cnt)
        out[start:start + cnt] = X @ W
    return out


def empirical_char_field(f: GridFn, L: LevyTriple, G, nsamples: int, seed: int) -> complex:
    """``(1/n) sum_s exp(i Phi_s(f))``."""
    if nsamples < 1:
        raise ValueError("nsamples must be >= 1")
    if not np.any(f.values):
        return 1.0 + 0.0j
    phi = field_pairings([f], G, L, nsamples, seed)[:, 0]
    return complex(np.mean(np.exp(1j * phi)))


def analytic_char_field(f: GridFn, L: LevyTriple, G) -> complex:
    """``exp(int Psi((G * f)(x)) dx)``."""
    return char_functional(GridFn(f.lattice, smeared_kernel(G, f)), L)

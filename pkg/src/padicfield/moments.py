"""Set partitions, Schwinger functions and the p-adic Brownian sheet."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .lattice import LatticeMismatch
from .noise import _SHEET_STREAM, CHUNK, LevyTriple, _chunk_rng, field_pairings, moment_constants, smeared_kernel

MAX_PARTITION_ORDER = 10
MAX_ANALYTIC_ORDER = 8


@dataclass(frozen=True)
class SetPartition:
    """Blocks of ``{0, ..., m-1}``, each sorted, ordered by least element."""

    blocks: tuple

    @property
    def sizes(self) -> tuple:
        return tuple(len(b) for b in self.blocks)


def set_partitions(m: int) -> list[SetPartition]:
    """All partitions of an ``m``-element set in restricted-growth order.

    ``m = 0`` yields the single empty partition.
    """
    if not 0 <= m <= MAX_PARTITION_ORDER:
        raise ValueError(f"m must lie in [0, {MAX_PARTITION_ORDER}]")
    out = []

    def grow(i, blocks):
        if i == m:
            out.append(SetPartition(tuple(tuple(b) for b in blocks)))
            return
        for b in blocks:
            b.append(i)
            grow(i + 1, blocks)
            b.pop()
        blocks.append([i])
        grow(i + 1, blocks)
        blocks.pop()

    grow(0, [])
    return out


def _smeared(gs, G):
    if not gs:
        return []
    lat = gs[0].lattice
    for g in gs:
        if g.lattice != lat:
            raise LatticeMismatch("all test functions must share one lattice")
        if not g.is_real():
            raise ValueError("test functions must be real")
    return [smeared_kernel(G, g) for g in gs]


def schwinger_analytic(gs, L: LevyTriple, G, B=None) -> float:
    """``S_m = sum_partitions prod_blocks c_|b| int prod_{k in b} (G * g_k) dx``.

    The inputs are put in a canonical order first, so the result is
    bit-for-bit independent of the order of ``gs``.
    """
    m = len(gs)
    if m > MAX_ANALYTIC_ORDER:
        raise ValueError(f"analytic Schwinger functions are limited to m <= {MAX_ANALYTIC_ORDER}")
    if m == 0:
        return 1.0
    order = sorted(range(m), key=lambda i: np.ascontiguousarray(gs[i].values).tobytes())
    w = _smeared([gs[i] for i in order], G)
    v = gs[0].lattice.cell_volume
    c = moment_constants(L, m)
    total = 0.0
    for part in set_partitions(m):
        if any(c[len(b) - 1] == 0.0 for b in part.blocks):
            continue
        term = 1.0
        for b in part.blocks:
            prod = w[b[0]].copy()
            for k in b[1:]:
                prod *= w[k]
            term *= c[len(b) - 1] * float(np.sum(prod)) * v
        total += term
    return total


def schwinger_mc(gs, L: LevyTriple, G, B=None, nsamples: int = 10_000, seed: int = 0) -> tuple[float, float]:
    """Monte-Carlo mean of ``prod_j Phi(g_j)`` and its standard error."""
    if len(gs) == 0:
        return 1.0, 0.0
    if nsamples < 2:
        raise ValueError("nsamples must be >= 2")
    _smeared(gs, G)  # validation only
    phi = field_pairings(list(gs), G, L, nsamples, seed)
    prod = np.prod(phi, axis=1)
    return float(prod.mean()), float(prod.std(ddof=1) / math.sqrt(nsamples))


# -- Brownian sheet -----------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SheetPath:
    radii: tuple
    values: np.ndarray


def _check_radii(radii):
    r = [float(x) for x in radii]
    if any(x < 0 for x in r):
        raise ValueError("radii must be non-negative")
    if any(b <= a for a, b in zip(r, r[1:])):
        raise ValueError("radii must be strictly increasing")
    return r


def sheet_paths(radii, N: int, sigma: float, nsamples: int, seed: int) -> np.ndarray:
    """``W(t)`` at ``||t|| = radii`` for ``nsamples`` independent paths, shape ``(n, R)``.

    ``W`` pairs Gaussian white noise with the ball indicator of radius
    ``||t||``, so it is a sum of independent shell increments with variances
    ``sigma^2 (rho_{r+1}^N - rho_r^N)``.  Radius 0 gives ``W = 0``.
    """
    r = _check_radii(radii)
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    if nsamples < 1:
        raise ValueError("nsamples must be >= 1")
    vol = np.array([x**N for x in r])
    sd = sigma * np.sqrt(np.diff(np.concatenate([[0.0], vol])))
    nchunks = -(-nsamples // CHUNK)
    out = np.empty((nchunks * CHUNK, len(r)))
    for c in range(nchunks):
        z = _chunk_rng(seed, c, _SHEET_STREAM).standard_normal((CHUNK, len(r)))
        out[c * CHUNK:(c + 1) * CHUNK] = np.cumsum(z * sd, axis=1)
    return out[:nsamples]


def sheet_sample(radii, N: int, sigma: float, seed: int, index: int = 0) -> SheetPath:
    """Path number ``index`` of :func:`sheet_paths`."""
    vals = sheet_paths(radii, N, sigma, index + 1, seed)[index]
    return SheetPath(tuple(float(x) for x in radii), vals)


def sheet_covariance(radii, N: int, sigma: float) -> np.ndarray:
    """``sigma^2 min(||t||, ||s||)^N``: the volume of the smaller ball."""
    r = np.array(_check_radii(radii))
    return sigma**2 * np.minimum.outer(r, r) ** N

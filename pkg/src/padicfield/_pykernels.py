"""NumPy implementations of the hot loops; used when the extension is absent."""
import numpy as np

_BLOCK = 1 << 20  # max phase-matrix entries held at once


def _indices(npts, side, ndim):
    return np.stack(np.unravel_index(np.arange(npts), (side,) * ndim), axis=1).astype(np.int64)


def char_sum_dft(values, side, ndim, bt, sign):
    values = np.ascontiguousarray(values, dtype=np.complex128)
    npts = values.shape[0]
    mi = _indices(npts, side, ndim)
    w = (mi @ np.asarray(bt, dtype=np.int64).T) % side
    tw = np.exp(sign * 2j * np.pi * np.arange(side) / side)
    out = np.empty(npts, dtype=np.complex128)
    rows = max(1, _BLOCK // max(npts, 1))
    for start in range(0, npts, rows):
        ph = (w[start:start + rows] @ mi.T) % side
        out[start:start + rows] = tw[ph] @ values
    return out


def poly_residue_table(exps, coefs, ndim, modulus):
    exps = np.asarray(exps, dtype=np.int64)
    coefs = np.asarray(coefs, dtype=np.int64)
    z = np.arange(modulus, dtype=np.int64)
    maxdeg = int(exps.max()) if exps.size else 0
    pw = [np.ones(modulus, dtype=np.int64)]
    for _ in range(maxdeg):
        pw.append(pw[-1] * z % modulus)
    acc = np.zeros((modulus,) * ndim, dtype=np.int64)
    for t in range(exps.shape[0]):
        term = np.full((1,) * ndim, coefs[t] % modulus, dtype=np.int64)
        for i in range(ndim):
            shape = [1] * ndim
            shape[i] = modulus
            term = term * pw[exps[t, i]].reshape(shape) % modulus
        acc = (acc + term) % modulus
    return acc.reshape(-1)


def phase_weighted_sum(z, w, modulus, h, sign):
    z = np.asarray(z, dtype=np.int64) % modulus
    ph = np.zeros(z.shape[0], dtype=np.int64)
    for i, wi in enumerate(np.asarray(w, dtype=np.int64)):
        ph = (ph + z[:, i] * wi) % modulus
    return complex(np.sum(np.asarray(h) * np.exp(sign * 2j * np.pi * ph / modulus)))


def phase_weighted_sum_batch(z, w, modulus, h, sign):
    z = np.asarray(z, dtype=np.int64) % modulus
    w = np.asarray(w, dtype=np.int64) % modulus
    h = np.asarray(h, dtype=float)
    out = np.empty(w.shape[0], dtype=np.complex128)
    rows = max(1, _BLOCK // max(z.shape[0], 1))
    for start in range(0, w.shape[0], rows):
        ph = np.zeros((min(rows, w.shape[0] - start), z.shape[0]), dtype=np.int64)
        for i in range(z.shape[1]):
            ph = (ph + np.outer(w[start:start + rows, i], z[:, i])) % modulus
        out[start:start + rows] = np.exp(sign * 2j * np.pi * ph / modulus) @ h
    return out

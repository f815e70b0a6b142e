# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops.  Signatures mirror ``_pykernels`` exactly."""
import numpy as np
cimport numpy as cnp
from libc.math cimport cos, sin, M_PI

cnp.import_array()

ctypedef cnp.int64_t i64


def char_sum_dft(const double complex[::1] values, i64 side, int ndim,
                 const i64[:, ::1] bt, int sign):
    """out[n] = sum_m values[m] * exp(sign 2 pi i ((m^T bt n) mod side) / side)."""
    cdef Py_ssize_t npts = values.shape[0]
    cdef Py_ssize_t a, b, i, r
    cdef i64 ph, tmp
    cdef double complex acc
    out_arr = np.empty(npts, dtype=np.complex128)
    cdef double complex[::1] out = out_arr
    tw_arr = np.empty(side, dtype=np.complex128)
    cdef double complex[::1] tw = tw_arr
    for r in range(side):
        tw[r] = cos(2.0 * M_PI * r / side) + 1j * sign * sin(2.0 * M_PI * r / side)
    mi_arr = np.empty((npts, ndim), dtype=np.int64)
    cdef i64[:, ::1] mi = mi_arr
    for a in range(npts):
        tmp = a
        for i in range(ndim - 1, -1, -1):
            mi[a, i] = tmp % side
            tmp //= side
    w_arr = np.empty(ndim, dtype=np.int64)
    cdef i64[::1] w = w_arr
    cdef Py_ssize_t c
    for b in range(npts):
        for i in range(ndim):
            tmp = 0
            for c in range(ndim):
                tmp = (tmp + bt[i, c] * mi[b, c]) % side
            if tmp < 0:
                tmp += side
            w[i] = tmp
        acc = 0
        for a in range(npts):
            ph = 0
            for i in range(ndim):
                ph += mi[a, i] * w[i]
            acc = acc + values[a] * tw[ph % side]
        out[b] = acc
    return out_arr


def poly_residue_table(const i64[:, ::1] exps, const i64[::1] coefs, int ndim, i64 modulus):
    """Values of sum_t coefs[t] * prod_i z_i**exps[t, i] mod modulus, z row-major."""
    cdef Py_ssize_t nterms = exps.shape[0]
    cdef Py_ssize_t npts = 1
    cdef Py_ssize_t a, t, i, e
    cdef i64 tmp, acc, term, zi
    for i in range(ndim):
        npts *= modulus
    out_arr = np.empty(npts, dtype=np.int64)
    cdef i64[::1] out = out_arr
    z_arr = np.empty(ndim, dtype=np.int64)
    cdef i64[::1] z = z_arr
    for a in range(npts):
        tmp = a
        for i in range(ndim - 1, -1, -1):
            z[i] = tmp % modulus
            tmp //= modulus
        acc = 0
        for t in range(nterms):
            term = coefs[t] % modulus
            if term < 0:
                term += modulus
            for i in range(ndim):
                zi = z[i]
                for e in range(exps[t, i]):
                    term = (term * zi) % modulus
            acc = (acc + term) % modulus
        out[a] = acc
    return out_arr


def phase_weighted_sum(const i64[:, ::1] z, const i64[::1] w, i64 modulus,
                       const double[::1] h, int sign):
    """sum_i h[i] * exp(sign 2 pi i ((z[i] . w) mod modulus) / modulus)."""
    cdef Py_ssize_t nrep = z.shape[0]
    cdef Py_ssize_t ndim = z.shape[1]
    cdef Py_ssize_t r, i
    cdef i64 ph
    cdef double re = 0.0, im = 0.0, ang
    for r in range(nrep):
        ph = 0
        for i in range(ndim):
            ph = (ph + (z[r, i] % modulus) * w[i]) % modulus
        if ph < 0:
            ph += modulus
        ang = 2.0 * M_PI * ph / modulus
        re += h[r] * cos(ang)
        im += sign * h[r] * sin(ang)
    return re + 1j * im


def phase_weighted_sum_batch(const i64[:, ::1] z, const i64[:, ::1] w, i64 modulus,
                             const double[::1] h, int sign):
    """Row-wise phase_weighted_sum: out[b] = sum_i h[i] exp(sign 2 pi i (z[i] . w[b]) / modulus)."""
    cdef Py_ssize_t nrep = z.shape[0]
    cdef Py_ssize_t ndim = z.shape[1]
    cdef Py_ssize_t nb = w.shape[0]
    cdef Py_ssize_t b, r, i
    cdef i64 ph
    cdef double re, im, ang
    out_arr = np.empty(nb, dtype=np.complex128)
    cdef double complex[::1] out = out_arr
    zr_arr = np.empty((nrep, ndim), dtype=np.int64)
    cdef i64[:, ::1] zr = zr_arr
    for r in range(nrep):
        for i in range(ndim):
            ph = z[r, i] % modulus
            zr[r, i] = ph + modulus if ph < 0 else ph
    for b in range(nb):
        re = 0.0
        im = 0.0
        for r in range(nrep):
            ph = 0
            for i in range(ndim):
                ph = (ph + zr[r, i] * w[b, i]) % modulus
            if ph < 0:
                ph += modulus
            ang = 2.0 * M_PI * ph / modulus
            re += h[r] * cos(ang)
            im += h[r] * sin(ang)
        out[b] = re + 1j * sign * im
    return out_arr

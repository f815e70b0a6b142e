"""Backend selection for the hot loops.

The Cython extension ``_kernels`` is used when it was built; otherwise the
NumPy versions in ``_pykernels`` are used.  Set ``PADICFIELD_PURE=1`` to force
the fallback.
"""
import os

from . import _pykernels

if os.environ.get("PADICFIELD_PURE", "") not in ("", "0"):
    _impl = _pykernels
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl
        BACKEND = "cython"
    except ImportError:
        _impl = _pykernels
        BACKEND = "python"

# int64 products of two residues must not overflow
MAX_MODULUS = 3_037_000_499


def _check_modulus(modulus):
    assert 0 < modulus <= MAX_MODULUS, f"modulus {modulus} exceeds the int64 fast path"


def char_sum_dft(values, side, ndim, bt, sign=1):
    _check_modulus(side)
    return _impl.char_sum_dft(values, int(side), int(ndim), bt, int(sign))


def poly_residue_table(exps, coefs, ndim, modulus):
    _check_modulus(modulus)
    return _impl.poly_residue_table(exps, coefs, int(ndim), int(modulus))


def phase_weighted_sum(z, w, modulus, h, sign=-1):
    _check_modulus(modulus)
    return _impl.phase_weighted_sum(z, w, int(modulus), h, int(sign))


def phase_weighted_sum_batch(z, w, modulus, h, sign=-1):
    """Row-wise :func:`phase_weighted_sum`; ``w`` must be reduced mod ``modulus``."""
    _check_modulus(modulus)
    return _impl.phase_weighted_sum_batch(z, w, int(modulus), h, int(sign))


def backends():
    """Both implementations, for cross-checking and benchmarking."""
    out = {"python": _pykernels}
    try:
        from . import _kernels
        out["cython"] = _kernels
    except ImportError:
        pass
    return out

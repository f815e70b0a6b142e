"""p-adic fields: lattice Fourier analysis, elliptic operators, Levy noise and Euclidean fields."""
from .kernels import BACKEND
from .lattice import (
    BilinearForm,
    GridFn,
    Lattice,
    LatticeMismatch,
    character_integral,
    convolve,
    fourier_forward,
    fourier_inverse,
    frequency_integral,
    haar_integral,
    read_csv,
    sobolev_norm,
    write_csv,
)
from .moments import (
    SetPartition,
    SheetPath,
    schwinger_analytic,
    schwinger_mc,
    set_partitions,
    sheet_covariance,
    sheet_paths,
    sheet_sample,
)
from .noise import (
    FieldSample,
    LevyTriple,
    NoiseSample,
    analytic_char_field,
    char_functional,
    empirical_char_field,
    moment_constants,
    psi_eval,
    sample_field,
    sample_noise,
)
from .operators import (
    EllipticityCertificate,
    EllipticPolynomial,
    GreenKernel,
    NotCertified,
    SmoothSymbol,
    apply_symbol,
    certify_elliptic,
    decay_fit,
    green_series,
    green_series_lattice,
    green_spectral,
    invert_symbol,
    klein_gordon_solve,
    klein_gordon_symbol,
    z_alpha,
)
from .padic import PRational, PVector, chi, fractional_part, padic_norm, vector_norm
from .symmetry import (
    EuclideanElement,
    act_on_function,
    invariance_report,
    preserves_polynomial,
    preserves_quadratic,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "BilinearForm",
    "EllipticPolynomial",
    "EllipticityCertificate",
    "EuclideanElement",
    "FieldSample",
    "GreenKernel",
    "GridFn",
    "Lattice",
    "LatticeMismatch",
    "LevyTriple",
    "NoiseSample",
    "NotCertified",
    "PRational",
    "PVector",
    "SetPartition",
    "SheetPath",
    "SmoothSymbol",
    "act_on_function",
    "analytic_char_field",
    "apply_symbol",
    "certify_elliptic",
    "char_functional",
    "character_integral",
    "chi",
    "convolve",
    "decay_fit",
    "empirical_char_field",
    "fourier_forward",
    "fourier_inverse",
    "fractional_part",
    "frequency_integral",
    "green_series",
    "green_series_lattice",
    "green_spectral",
    "haar_integral",
    "invariance_report",
    "invert_symbol",
    "klein_gordon_solve",
    "klein_gordon_symbol",
    "moment_constants",
    "padic_norm",
    "preserves_polynomial",
    "preserves_quadratic",
    "psi_eval",
    "read_csv",
    "sample_field",
    "sample_noise",
    "schwinger_analytic",
    "schwinger_mc",
    "set_partitions",
    "sheet_covariance",
    "sheet_paths",
    "sheet_sample",
    "sobolev_norm",
    "vector_norm",
    "write_csv",
    "z_alpha",
]

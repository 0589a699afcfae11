"""cubelab: a desk-scale laboratory for sums of two cubes and two minicubes."""

from cubelab.expsums import (
    MAIN_TERM_CONSTANT,
    cubic_gauss_sum,
    local_density,
    main_term,
    singular_series_euler,
    singular_series_truncated,
)
from cubelab.params import (
    Parameters,
    PreconditionError,
    Rational,
    ResourceGuardError,
    best_rational,
    derive_parameters,
    integer_cube_root,
)
from cubelab.repcount import batch_scan, count_r, count_rho, count_sigma, hua_count
from cubelab.smooth import restricted_primes, smooth_interval_set, smooth_set

__version__ = "0.1.0"

__all__ = [
    "MAIN_TERM_CONSTANT",
    "Parameters",
    "PreconditionError",
    "Rational",
    "ResourceGuardError",
    "batch_scan",
    "best_rational",
    "count_r",
    "count_rho",
    "count_sigma",
    "cubic_gauss_sum",
    "derive_parameters",
    "hua_count",
    "integer_cube_root",
    "local_density",
    "main_term",
    "restricted_primes",
    "singular_series_euler",
    "singular_series_truncated",
    "smooth_interval_set",
    "smooth_set",
    "__version__",
]

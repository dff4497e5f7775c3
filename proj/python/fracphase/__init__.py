"""Time-fractional Allen-Cahn solver."""

from ._core import (
    FracphaseError,
    check_invariants,
    compute_rates,
    convolve_prefix,
    laplacian,
    nonlinear_term,
    parse_config,
    random_initial,
    read_snapshot,
    sftr_caputo_error,
    solve,
    solve_helmholtz,
    vartheta_integral_error,
    weights,
)

__all__ = [
    "FracphaseError",
    "check_invariants",
    "compute_rates",
    "convolve_prefix",
    "laplacian",
    "nonlinear_term",
    "parse_config",
    "random_initial",
    "read_snapshot",
    "sftr_caputo_error",
    "solve",
    "solve_helmholtz",
    "vartheta_integral_error",
    "weights",
]

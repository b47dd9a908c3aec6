"""General fractional integrals and derivatives of arbitrary order.

Kernel pairs ``(kappa, k)`` of order ``n`` satisfy ``kappa * k = t**(n-1)/(n-1)!``.
The package builds such pairs, applies the integral ``f -> kappa * f`` and the
Riemann-Liouville and Caputo type derivatives built from ``k``, and checks the
pair condition and the fundamental theorems numerically.
"""

from .convolution import (
    DEFAULT_GRID,
    Grid,
    LaplaceResult,
    SampledResult,
    convolve_kernel_function,
    convolve_kernels,
    laplace_transform,
    make_graded_grid,
)
from .errors import (
    AccuracyWarning,
    CapabilityError,
    ConvergenceError,
    DomainError,
    ParseError,
    PoleError,
    QuadratureError,
    TailWarning,
)
from .functions import FunctionSpec, Tabulated
from .kernels import (
    Kernel,
    KernelPair,
    bessel_i_kernel,
    bessel_j_kernel,
    lift_pair,
    make_bessel_pair,
    make_power_kernel,
    make_power_pair,
    make_series_pair,
    solve_associated_coefficients,
)
from .operators import classical_derivative, gfd_caputo, gfd_rl, gfi, rl_integral
from .specfun import SeriesTolerance, bessel_i, bessel_j, gamma_fn, rgamma
from .verify import (
    ConvergenceStudy,
    ResidualReport,
    check_ftc1,
    check_ftc2,
    check_index_law,
    check_laplace_condition,
    check_pair_condition,
    convergence_study,
)

__version__ = "0.1.0"

__all__ = [
    "AccuracyWarning",
    "CapabilityError",
    "ConvergenceError",
    "ConvergenceStudy",
    "DEFAULT_GRID",
    "DomainError",
    "FunctionSpec",
    "Grid",
    "Kernel",
    "KernelPair",
    "LaplaceResult",
    "ParseError",
    "PoleError",
    "QuadratureError",
    "ResidualReport",
    "SampledResult",
    "SeriesTolerance",
    "Tabulated",
    "TailWarning",
    "bessel_i",
    "bessel_i_kernel",
    "bessel_j",
    "bessel_j_kernel",
    "check_ftc1",
    "check_ftc2",
    "check_index_law",
    "check_laplace_condition",
    "check_pair_condition",
    "classical_derivative",
    "convergence_study",
    "convolve_kernel_function",
    "convolve_kernels",
    "gamma_fn",
    "gfd_caputo",
    "gfd_rl",
    "gfi",
    "laplace_transform",
    "lift_pair",
    "make_bessel_pair",
    "make_graded_grid",
    "make_power_kernel",
    "make_power_pair",
    "make_series_pair",
    "rgamma",
    "rl_integral",
    "solve_associated_coefficients",
]

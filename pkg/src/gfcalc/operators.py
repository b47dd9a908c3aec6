"""General fractional integral and derivatives of arbitrary order.

For a pair ``(kappa, k)`` of order ``n``:

* ``gfi``:         ``f -> kappa * f``
* ``gfd_rl``:      ``f -> d^n/dt^n (k * f)``
* ``gfd_caputo``:  ``gfd_rl`` applied to ``f`` minus its Taylor polynomial of degree ``n-1``.

Derivatives are never formed by numerical differencing of a convolution.
For smooth ``f`` the expression rules of :mod:`gfcalc.functions` reduce to

    caputo(f) = k * f^(n)
    rl(f)     = caputo(f) + sum_{j<n} f^(j)(0) k^(n-1-j)(t),

with the kernel derivatives in closed form.  Tabulated inputs have no
derivatives; ``gfd_rl`` then falls back to finite differences of ``k * f`` on
a uniform mesh and marks the result as reduced accuracy.
"""

from __future__ import annotations

import math
import warnings

import numpy as np

from .convolution import Grid, SampledResult, moment_weights
from .errors import AccuracyWarning, CapabilityError, DomainError
from .functions import FunctionSpec, Tabulated, convolve, taylor_remainder
from .kernels import Kernel, KernelPair, make_power_kernel, make_power_pair

__all__ = [
    "gfi",
    "gfd_rl",
    "gfd_caputo",
    "gfi_spec",
    "gfd_rl_spec",
    "gfd_caputo_spec",
    "rl_integral",
    "classical_derivative",
]


def _require_derivatives(pair: KernelPair, f: FunctionSpec, op: str):
    if f.derivative_order_available < pair.order:
        raise CapabilityError(
            f"{op} of order {pair.order} needs {pair.order} derivatives of f; "
            f"{f.kind} input provides {f.derivative_order_available}"
        )


def gfi_spec(pair_or_kernel, f: FunctionSpec) -> FunctionSpec:
    kappa = pair_or_kernel.kappa if isinstance(pair_or_kernel, KernelPair) else pair_or_kernel
    return convolve(kappa, f)


def gfd_rl_spec(pair: KernelPair, f: FunctionSpec) -> FunctionSpec:
    _require_derivatives(pair, f, "gfd_rl")
    return convolve(pair.k, f).derivative(pair.order)


def gfd_caputo_spec(pair: KernelPair, f: FunctionSpec) -> FunctionSpec:
    _require_derivatives(pair, f, "gfd_caputo")
    return convolve(pair.k, taylor_remainder(f, pair.order)).derivative(pair.order)


def _result(spec: FunctionSpec, grid: Grid, op: str) -> SampledResult:
    return SampledResult(grid, np.array(spec.evaluate(grid)), {"operator": op, "route": "exact-derivative"})


def gfi(pair: KernelPair, f: FunctionSpec, grid: Grid) -> SampledResult:
    """``(kappa * f)(t_i)``."""
    return _result(gfi_spec(pair, f), grid, "gfi")


def gfd_caputo(pair: KernelPair, f: FunctionSpec, grid: Grid) -> SampledResult:
    """Caputo-type derivative; needs ``n`` exact derivatives of ``f``."""
    return _result(gfd_caputo_spec(pair, f), grid, "gfd_caputo")


def gfd_rl(pair: KernelPair, f: FunctionSpec, grid: Grid) -> SampledResult:
    """Riemann-Liouville-type derivative.

    Tabulated ``f`` goes through the finite-difference fallback, which emits
    an :class:`~gfcalc.errors.AccuracyWarning`.
    """
    if isinstance(f, Tabulated):
        return _rl_finite_difference(pair, f, grid)
    return _result(gfd_rl_spec(pair, f), grid, "gfd_rl")


def _uniform_conv(k: Kernel, samples: np.ndarray, h: float) -> np.ndarray:
    # product rule on a uniform mesh is a Toeplitz sum: values at s_1..s_M
    m = samples.size - 1
    d = np.arange(1, m + 1, dtype=float) * h
    x = np.ones(m)
    x[1:] = 1.0 / np.arange(2, m + 1)
    w_near, w_far = moment_weights(d, x, float(k.exponent))
    lag = np.arange(m + 1, dtype=float) * h
    a = k.analytic_part(lag)
    # interval between nodes l-1 and l counted back from the evaluation node
    near = np.concatenate([w_near, [0.0]])  # index by distance of the near end
    far = np.concatenate([[0.0], w_far])  # index by distance of the far end
    c = (near + far) * a
    full = np.convolve(c, samples)[: m + 1]
    # node 0 has no interval to its left
    full -= near[np.arange(m + 1)] * a[np.arange(m + 1)] * samples[0]
    return full[1:]


def _rl_finite_difference(pair: KernelPair, f: Tabulated, grid: Grid) -> SampledResult:
    n = pair.order
    m = 4 * grid.N
    h = grid.T / m
    s = np.arange(m + 1) * h
    conv = np.empty(m + 1)
    conv[0] = 0.0
    conv[1:] = _uniform_conv(pair.k, np.asarray(f.value(s)), h)
    deriv = conv
    for _ in range(n):
        deriv = np.gradient(deriv, h, edge_order=2)
    values = np.interp(grid.interior, s, deriv)
    warnings.warn(
        "gfd_rl on tabulated input uses finite differences of the convolution; "
        "accuracy is reduced, especially near t = 0",
        AccuracyWarning,
        stacklevel=2,
    )
    return SampledResult(
        grid,
        values,
        {"operator": "gfd_rl", "route": "finite-difference", "accuracy": "reduced", "step": h},
    )


def rl_integral(alpha: float, f: FunctionSpec, grid: Grid) -> SampledResult:
    """Riemann-Liouville integral of order ``alpha >= 0``; order 0 is the identity."""
    alpha = float(alpha)
    if not alpha >= 0:
        raise DomainError(f"integral order must be non-negative, got {alpha}")
    if alpha == 0:
        return SampledResult(grid, np.array(f.evaluate(grid)), {"operator": "identity"})
    return _result(convolve(make_power_kernel(alpha), f), grid, "rl_integral")


def classical_derivative(alpha: float, flavor: str, f: FunctionSpec, grid: Grid) -> SampledResult:
    """Riemann-Liouville or Caputo derivative of non-integer order ``alpha``."""
    alpha = float(alpha)
    if not alpha > 0:
        raise DomainError(f"derivative order must be positive, got {alpha}")
    if alpha == math.floor(alpha):
        raise DomainError(
            f"order {alpha:g} is an integer; use ordinary differentiation "
            f"(f.derivative({int(alpha)})) instead"
        )
    n = math.ceil(alpha)
    pair = make_power_pair(alpha, n)
    if flavor == "riemann_liouville":
        return gfd_rl(pair, f, grid)
    if flavor == "caputo":
        return gfd_caputo(pair, f, grid)
    raise DomainError(f"flavor must be 'riemann_liouville' or 'caputo', got {flavor!r}")

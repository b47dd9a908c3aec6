"""Input functions and lazily evaluated convolution expressions.

A :class:`FunctionSpec` knows its values, its exact derivatives (when it has
them) and its behaviour ``~ c * t**e`` at the origin.  Besides the analytic
kinds (polynomials, exponentials, sinusoids) and tabulated samples, the
algebra contains kernel-valued functions, convolutions ``K * g`` and linear
combinations.  Convolutions are differentiated exactly, without numerical
differencing, by

* ``(K * g)' = K * g' + g(0) K`` when ``g'`` is locally integrable,
* ``(K * g)' = K' * g + K(0) g`` when ``K`` is continuous at the origin and
  ``K'`` is locally integrable,
* analytic series convolution when both factors are kernels.

Everything is sampled on a :class:`~gfcalc.convolution.Grid`; values at
``t = 0`` come from the leading behaviour, not from evaluation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import CapabilityError, DomainError, QuadratureError
from .kernels import Kernel, convolve_series
from .specfun import beta_fn

__all__ = [
    "FunctionSpec",
    "Polynomial",
    "Exponential",
    "Sinusoid",
    "Tabulated",
    "KernelFunction",
    "Convolution",
    "LinearCombination",
    "constant",
    "monomial",
    "polynomial",
    "exponential",
    "sinusoid",
    "power_function",
    "convolve",
    "taylor_remainder",
    "ZERO",
]

_EXP_TOL = 1e-9


def _snap(e: float) -> float:
    r = round(e)
    return float(r) if abs(e - r) < _EXP_TOL else e


class FunctionSpec:
    """Base class; subclasses are immutable and hashable."""

    kind = "abstract"

    @property
    def derivative_order_available(self):
        return math.inf

    def value(self, t):
        raise CapabilityError(f"{self.kind} functions are only evaluated on a grid")

    def derivative(self, m: int = 1) -> "FunctionSpec":
        if m < 0 or int(m) != m:
            raise DomainError(f"derivative order must be a non-negative integer, got {m}")
        out = self
        for _ in range(int(m)):
            out = out._derivative1()
        return out

    def _derivative1(self) -> "FunctionSpec":
        raise CapabilityError(f"{self.kind} function has no derivatives available")

    def leading(self) -> tuple[float, float]:
        """``(e, c)`` with ``f(t) = c t**e + o(t**e)``; ``e`` may be a lower bound when ``c == 0``."""
        raise NotImplementedError

    def value_at_zero(self) -> float:
        e, c = self.leading()
        if e > 0 or c == 0:
            return 0.0
        if e == 0:
            return c
        raise QuadratureError(f"{self.kind} function is unbounded at t = 0", node_index=0, t=0.0)

    @property
    def locally_integrable(self) -> bool:
        return self.leading()[0] > -1

    def initial_values(self, d: int) -> list[float]:
        """``f^(j)(0)`` for ``j = 0..d-1``."""
        if d > self.derivative_order_available:
            raise CapabilityError(
                f"{self.kind} function provides {self.derivative_order_available} derivatives, "
                f"{d} requested"
            )
        return [self.derivative(j).value_at_zero() for j in range(d)]

    def sample(self, grid) -> np.ndarray:
        """Values at all nodes ``t_0..t_N``; ``t_0`` must be finite."""
        out = np.empty(grid.N + 1)
        out[0] = self.value_at_zero()
        out[1:] = self.evaluate(grid)
        return out

    def evaluate(self, grid) -> np.ndarray:
        """Values at ``t_1..t_N``."""
        return np.asarray(self.value(grid.interior), dtype=float)

    # arithmetic builds linear combinations
    def __add__(self, other):
        if not isinstance(other, FunctionSpec):
            return NotImplemented
        return combine([(1.0, self), (1.0, other)])

    def __sub__(self, other):
        if not isinstance(other, FunctionSpec):
            return NotImplemented
        return combine([(1.0, self), (-1.0, other)])

    def __mul__(self, c):
        if isinstance(c, FunctionSpec):
            return NotImplemented
        return combine([(float(c), self)])

    __rmul__ = __mul__

    def __neg__(self):
        return combine([(-1.0, self)])


@dataclass(frozen=True, eq=True)
class Polynomial(FunctionSpec):
    """``sum_j coeffs[j] * t**j``."""

    coeffs: tuple[float, ...]
    kind: str = field(default="polynomial", compare=False)

    def value(self, t):
        t = np.asarray(t, dtype=float)
        acc = np.zeros_like(t)
        for c in reversed(self.coeffs):
            acc = acc * t + c
        return acc if acc.ndim else float(acc)

    def _derivative1(self):
        return Polynomial(tuple(j * c for j, c in enumerate(self.coeffs))[1:], self.kind)

    def leading(self):
        return (0.0, self.coeffs[0] if self.coeffs else 0.0)

    @property
    def is_zero(self) -> bool:
        return not any(self.coeffs)


@dataclass(frozen=True)
class Exponential(FunctionSpec):
    """``amplitude * exp(rate * t)``."""

    rate: float
    amplitude: float = 1.0
    kind = "exponential"

    def value(self, t):
        return self.amplitude * np.exp(self.rate * np.asarray(t, dtype=float))

    def _derivative1(self):
        return Exponential(self.rate, self.amplitude * self.rate)

    def leading(self):
        return (0.0, self.amplitude)


@dataclass(frozen=True)
class Sinusoid(FunctionSpec):
    """``a * sin(omega t) + b * cos(omega t)``."""

    omega: float
    a: float = 1.0
    b: float = 0.0
    kind = "sinusoid"

    def value(self, t):
        wt = self.omega * np.asarray(t, dtype=float)
        return self.a * np.sin(wt) + self.b * np.cos(wt)

    def _derivative1(self):
        return Sinusoid(self.omega, -self.b * self.omega, self.a * self.omega)

    def leading(self):
        return (0.0, self.b)


class Tabulated(FunctionSpec):
    """Samples ``(t, value)`` with linear interpolation and no derivatives.

    Outside the table the end values are held constant.
    """

    kind = "tabulated"

    def __init__(self, t: Sequence[float], values: Sequence[float]):
        t = np.array(t, dtype=float)
        v = np.array(values, dtype=float)
        if t.ndim != 1 or t.shape != v.shape or t.size < 2:
            raise DomainError("table needs two equal-length columns with at least two rows")
        if not np.all(np.diff(t) > 0):
            raise DomainError("table abscissae must be strictly increasing")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(v))):
            raise DomainError("table entries must be finite")
        t.flags.writeable = False
        v.flags.writeable = False
        self.t = t
        self.values = v

    @property
    def derivative_order_available(self):
        return 0

    def value(self, t):
        out = np.interp(np.asarray(t, dtype=float), self.t, self.values)
        return out if np.ndim(out) else float(out)

    def leading(self):
        return (0.0, float(self.value(0.0)))

    def __repr__(self):
        return f"Tabulated(<{self.t.size} rows on [{self.t[0]:g}, {self.t[-1]:g}]>)"


@dataclass(frozen=True)
class KernelFunction(FunctionSpec):
    """The function ``scale * kernel(t)``, singular at the origin when ``p < 0``."""

    kernel: Kernel
    scale: float = 1.0
    kind = "kernel"

    def value(self, t):
        return self.scale * np.asarray(self.kernel(t))

    def _derivative1(self):
        return KernelFunction(self.kernel.derivative(1), self.scale)

    def leading(self):
        if self.kernel.is_zero:
            return (0.0, 0.0)
        return (float(self.kernel.exponent), self.scale * self.kernel.leading_coeff)


@dataclass(frozen=True)
class Convolution(FunctionSpec):
    """``(kernel * inner)(t)``; build with :func:`convolve`."""

    kernel: Kernel
    inner: FunctionSpec
    kind = "convolution"

    @property
    def derivative_order_available(self):
        return math.inf

    def leading(self):
        e_g, c_g = self.inner.leading()
        p = float(self.kernel.exponent)
        e = _snap(p + 1.0 + e_g)
        if c_g == 0 or self.kernel.is_zero:
            return (e, 0.0)
        return (e, self.kernel.leading_coeff * c_g * beta_fn(p + 1.0, e_g + 1.0))

    def evaluate(self, grid):
        from .convolution import convolve_samples, kernel_convolution_values

        if isinstance(self.inner, KernelFunction):
            vals = kernel_convolution_values(self.kernel, self.inner.kernel, grid)
            return self.inner.scale * np.asarray(vals)
        return _cached_conv(self.kernel, self.inner, grid, convolve_samples)

    def _derivative1(self):
        K, g = self.kernel, self.inner
        try:
            dg = g.derivative(1)
        except CapabilityError:
            dg = None
        if dg is not None and _integrable(dg):
            out = convolve(K, dg)
            g0 = g.value_at_zero()
            if g0 != 0:
                out = out + g0 * KernelFunction(K)
            return out
        dK = K.derivative(1)
        if not K.is_zero and K.exponent >= 0 and dK.integrable:
            out = convolve(dK, g)
            k0 = K.value_at_zero()
            if k0 != 0:
                out = out + k0 * g
            return out
        if isinstance(g, KernelFunction):
            merged = convolve_series(K, g.kernel)
            return KernelFunction(merged.derivative(1), g.scale)
        raise CapabilityError(
            "cannot differentiate the convolution: neither factor has a locally "
            "integrable derivative"
        )


_CONV_CACHE: dict = {}
_CONV_CACHE_MAX = 512


def _cached_conv(kernel, inner, grid, convolve_samples):
    key = (kernel, inner, grid)
    try:
        hit = _CONV_CACHE.get(key)
    except TypeError:  # unhashable inner
        hit, key = None, None
    if hit is not None:
        return hit
    out = convolve_samples(kernel, inner.sample(grid), grid)
    out.flags.writeable = False
    if key is not None:
        if len(_CONV_CACHE) >= _CONV_CACHE_MAX:
            _CONV_CACHE.pop(next(iter(_CONV_CACHE)))
        _CONV_CACHE[key] = out
    return out


def clear_cache():
    _CONV_CACHE.clear()


@dataclass(frozen=True)
class LinearCombination(FunctionSpec):
    """``sum c_i * f_i``; build with :func:`combine`."""

    terms: tuple[tuple[float, FunctionSpec], ...]
    kind = "combination"

    @property
    def derivative_order_available(self):
        if not self.terms:
            return math.inf
        return min(f.derivative_order_available for _, f in self.terms)

    def value(self, t):
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        for c, f in self.terms:
            out = out + c * np.asarray(f.value(t))
        return out if out.ndim else float(out)

    def evaluate(self, grid):
        out = np.zeros(grid.N)
        for c, f in self.terms:
            out = out + c * f.evaluate(grid)
        return out

    def sample(self, grid):
        out = np.zeros(grid.N + 1)
        for c, f in self.terms:
            out = out + c * f.sample(grid)
        return out

    def _derivative1(self):
        return combine([(c, f.derivative(1)) for c, f in self.terms])

    def leading(self):
        if not self.terms:
            return (0.0, 0.0)
        leads = [(f.leading(), c) for c, f in self.terms]
        e_min = min(e for (e, _), _ in leads)
        coeff = sum(c * lc for (e, lc), c in leads if abs(e - e_min) < _EXP_TOL)
        if coeff == 0 and e_min < 0:
            raise CapabilityError("leading singular terms cancel; behaviour at 0 is unknown")
        return (e_min, coeff)

    def value_at_zero(self):
        # exact cancellation of equal values matters for Taylor subtraction
        if not self.terms:
            return 0.0
        return math.fsum(c * f.value_at_zero() for c, f in self.terms)


ZERO = LinearCombination(())


def _integrable(f: FunctionSpec) -> bool:
    if isinstance(f, LinearCombination):
        return all(_integrable(g) for _, g in f.terms)
    if isinstance(f, KernelFunction):
        return f.kernel.integrable
    return f.locally_integrable


def combine(terms) -> FunctionSpec:
    """Flatten, merge polynomials and repeated terms, drop zeros."""
    flat: list[tuple[float, FunctionSpec]] = []
    for c, f in terms:
        if isinstance(f, LinearCombination):
            flat.extend((c * ci, fi) for ci, fi in f.terms)
        else:
            flat.append((c, f))
    poly: list[float] = []
    merged: dict = {}
    order: list = []
    for c, f in flat:
        if c == 0:
            continue
        if isinstance(f, Polynomial):
            if len(poly) < len(f.coeffs):
                poly.extend([0.0] * (len(f.coeffs) - len(poly)))
            for j, a in enumerate(f.coeffs):
                poly[j] += c * a
            continue
        if isinstance(f, KernelFunction) and f.kernel.is_zero:
            continue
        key = f
        try:
            hash(key)
        except TypeError:
            key = id(f)
        if key in merged:
            merged[key] = (merged[key][0] + c, f)
        else:
            merged[key] = (c, f)
            order.append(key)
    out = [merged[k] for k in order if merged[k][0] != 0]
    while poly and poly[-1] == 0:
        poly.pop()
    if poly:
        out.insert(0, (1.0, Polynomial(tuple(poly))))
    if len(out) == 1 and out[0][0] == 1.0:
        return out[0][1]
    return LinearCombination(tuple(out))


def convolve(kernel: Kernel, f: FunctionSpec) -> FunctionSpec:
    """Lazy ``kernel * f``, distributed over linear combinations."""
    if not kernel.integrable:
        raise DomainError(
            f"kernel exponent {kernel.exponent:g} is not locally integrable (needs > -1)"
        )
    if isinstance(f, LinearCombination):
        return combine([(c, convolve(kernel, g)) for c, g in f.terms])
    if isinstance(f, Polynomial) and f.is_zero:
        return ZERO
    if kernel.is_zero:
        return ZERO
    if not _integrable(f):
        raise DomainError(f"{f.kind} function is not locally integrable at t = 0")
    return Convolution(kernel, f)


def taylor_remainder(f: FunctionSpec, n: int) -> FunctionSpec:
    """``f - sum_{j<n} f^(j)(0) t**j / j!``."""
    init = f.initial_values(n)
    taylor = Polynomial(tuple(v / math.factorial(j) for j, v in enumerate(init)))
    return f - taylor


def constant(c: float = 1.0) -> Polynomial:
    return Polynomial((float(c),), "constant")


def monomial(m: int, c: float = 1.0) -> Polynomial:
    if isinstance(m, bool) or int(m) != m or m < 0:
        raise DomainError(f"monomial degree must be a non-negative integer, got {m}")
    return Polynomial(tuple([0.0] * int(m) + [float(c)]), "monomial")


def polynomial(coeffs: Sequence[float]) -> Polynomial:
    return Polynomial(tuple(float(c) for c in coeffs))


def exponential(rate: float, amplitude: float = 1.0) -> Exponential:
    return Exponential(float(rate), float(amplitude))


def sinusoid(omega: float, a: float = 1.0, b: float = 0.0) -> Sinusoid:
    return Sinusoid(float(omega), float(a), float(b))


def power_function(alpha: float) -> KernelFunction:
    """``h_alpha`` as an input function."""
    from .kernels import make_power_kernel

    return KernelFunction(make_power_kernel(alpha))

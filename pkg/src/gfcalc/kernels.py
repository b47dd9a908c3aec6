"""Weakly singular kernels ``t**p * A(t)`` and kernel pairs of order ``n``.

Every kernel is stored as a (possibly truncated) generalized power series

    kernel(t) = sum_k c_k * t**(k + p),

so the leading exponent ``p`` is explicit and the analytic part
``A(t) = sum_k c_k t**k`` is an ordinary polynomial.  Power kernels
``h_alpha(t) = t**(alpha - 1) / Gamma(alpha)`` are the one-term case.

A pair ``(kappa, k)`` of order ``n`` satisfies ``kappa * k = h_n`` with
``kappa`` locally integrable and ``k`` integrably singular at the origin.
Pairs of order ``n >= 2`` are built either directly (power and Bessel
families) or by lifting an order-one pair through ``kappa_n = h_{n-1} * kappa``.
Raising both kernels of an order-one pair to the ``n``-th convolution power
is intentionally not offered: the associate kernel then stops being singular
except for a narrow range of orders.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import mpmath
import numpy as np

from .errors import DomainError
from .specfun import beta_fn, gamma_fn, rgamma

__all__ = [
    "Kernel",
    "KernelPair",
    "make_power_kernel",
    "bessel_j_kernel",
    "bessel_i_kernel",
    "make_power_pair",
    "make_bessel_pair",
    "solve_associated_coefficients",
    "make_series_pair",
    "convolve_series",
    "lift_pair",
    "kernel_eval",
    "kernel_derivative_eval",
    "power_target",
]

FAMILIES = ("power", "bessel_j_scaled", "bessel_i_scaled", "series", "lifted", "product")
DEFAULT_BESSEL_TERMS = 40
_SOLVE_DPS = 50


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


@dataclass(frozen=True)
class Kernel:
    """Kernel ``sum_k coeffs[k] * t**(k + exponent)``.

    ``params`` holds the family parameters as ``(name, value)`` pairs and
    ``tail_coeff`` the coefficient of the first omitted series term (zero for
    closed-form kernels).  Derivative kernels may have ``exponent <= -1``;
    they evaluate pointwise but are rejected by the convolution routines.
    """

    family: str
    exponent: float
    coeffs: tuple[float, ...]
    params: tuple[tuple[str, float], ...] = ()
    tail_coeff: float = 0.0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise DomainError(f"unknown kernel family {self.family!r}")
        if not math.isfinite(self.exponent):
            raise DomainError(f"kernel exponent must be finite, got {self.exponent}")
        if not all(math.isfinite(c) for c in self.coeffs):
            raise DomainError("kernel coefficients must be finite")

    @property
    def is_zero(self) -> bool:
        return not any(self.coeffs)

    @property
    def leading_coeff(self) -> float:
        return self.coeffs[0] if self.coeffs else 0.0

    @property
    def integrable(self) -> bool:
        """Locally integrable at the origin (``p > -1``) or identically zero."""
        return self.is_zero or self.exponent > -1

    @property
    def n_terms(self) -> int:
        return len(self.coeffs)

    def param(self, name: str) -> float:
        for key, value in self.params:
            if key == name:
                return value
        raise KeyError(name)

    def analytic_part(self, t):
        """``A(t)``; Horner evaluation in a fixed order.

        Trailing terms whose total size over the requested points is below
        ``2**-64`` of the largest term are skipped.
        """
        t = np.asarray(t, dtype=float)
        coeffs = _significant_terms(self.coeffs, float(np.max(np.abs(t))) if t.size else 0.0)
        acc = np.full(t.shape, coeffs[-1] if coeffs else 0.0)
        for c in reversed(coeffs[:-1]):
            acc *= t
            acc += c
        return acc if acc.ndim else float(acc)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if self.is_zero:
            out = np.zeros_like(t)
        else:
            out = t**self.exponent * self.analytic_part(t)
        return out if out.ndim else float(out)

    def value_at_zero(self) -> float:
        """Limit of the kernel as ``t -> 0+``; ``inf`` if singular."""
        if self.is_zero or self.exponent > 0:
            return 0.0
        if self.exponent == 0:
            return self.leading_coeff
        return math.copysign(math.inf, self.leading_coeff)

    def derivative(self, m: int = 1) -> "Kernel":
        """Termwise ``m``-th derivative, valid for ``t > 0``."""
        if m < 0 or int(m) != m:
            raise DomainError(f"derivative order must be a non-negative integer, got {m}")
        if m == 0:
            return self
        p = self.exponent
        coeffs = []
        for k, c in enumerate(self.coeffs):
            coeffs.append(c * _falling(k + p, m))
        tail = self.tail_coeff * _falling(len(self.coeffs) + p, m)
        exponent = p - m
        # integer exponents can annihilate leading terms
        while len(coeffs) > 1 and coeffs[0] == 0.0:
            coeffs.pop(0)
            exponent += 1.0
        params = tuple(kv for kv in self.params if kv[0] != "derivative")
        params += (("derivative", float(m + self._derivative_order())),)
        return Kernel(self.family, exponent, tuple(coeffs), params, tail)

    def _derivative_order(self) -> int:
        try:
            return int(self.param("derivative"))
        except KeyError:
            return 0

    def tail_bound(self, T: float) -> float:
        """Magnitude of the first omitted series term at ``t = T``."""
        if self.tail_coeff == 0.0:
            return 0.0
        return abs(self.tail_coeff) * T ** (len(self.coeffs) + self.exponent)

    def to_record(self) -> str:
        """Single-line JSON record; floats carry 17 significant digits."""
        params = ", ".join(f"[{json.dumps(k)}, {_fmt(v)}]" for k, v in self.params)
        coeffs = ", ".join(_fmt(c) for c in self.coeffs)
        return (
            f'{{"family": {json.dumps(self.family)}, "exponent": {_fmt(self.exponent)}, '
            f'"params": [{params}], "coefficients": [{coeffs}], '
            f'"tail_coeff": {_fmt(self.tail_coeff)}}}'
        )

    @classmethod
    def from_record(cls, text: str) -> "Kernel":
        data = json.loads(text)
        return cls(
            family=data["family"],
            exponent=float(data["exponent"]),
            coeffs=tuple(float(c) for c in data["coefficients"]),
            params=tuple((str(k), float(v)) for k, v in data["params"]),
            tail_coeff=float(data.get("tail_coeff", 0.0)),
        )


def _significant_terms(coeffs: tuple, t_max: float) -> tuple:
    if len(coeffs) < 2:
        return coeffs
    with np.errstate(over="ignore", invalid="ignore"):
        sizes = np.abs(np.asarray(coeffs)) * t_max ** np.arange(len(coeffs), dtype=float)
    if not np.all(np.isfinite(sizes)):
        return coeffs
    tails = np.cumsum(sizes[::-1])[::-1]
    keep = np.flatnonzero(tails > 2.0**-64 * sizes.max())
    return coeffs[: int(keep[-1]) + 1] if keep.size else coeffs[:1]


def _falling(x: float, m: int) -> float:
    out = 1.0
    for i in range(m):
        out *= x - i
    return out


def power_target(n: int, t):
    """``h_n(t) = t**(n-1) / (n-1)!``, the right-hand side of the pair condition."""
    t = np.asarray(t, dtype=float)
    out = t ** (n - 1) / math.factorial(n - 1)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class KernelPair:
    """Ordered pair ``(kappa, k)`` declared to satisfy ``kappa * k = h_order``."""

    kappa: Kernel
    k: Kernel
    order: int

    def __post_init__(self):
        if int(self.order) != self.order or self.order < 1:
            raise DomainError(f"pair order must be a positive integer, got {self.order}")
        if not -1 < self.k.exponent < 0:
            raise DomainError(
                f"associate kernel exponent must lie in (-1, 0), got {self.k.exponent:g}"
            )
        if not self.kappa.exponent > -1:
            raise DomainError(
                f"kernel kappa must be locally integrable (exponent > -1), "
                f"got {self.kappa.exponent:g}"
            )

    def target(self, t):
        return power_target(self.order, t)


def _check_order(n) -> int:
    if isinstance(n, bool) or int(n) != n or n < 1:
        raise DomainError(f"order n must be a positive integer, got {n}")
    return int(n)


def make_power_kernel(alpha: float) -> Kernel:
    """``h_alpha(t) = t**(alpha - 1) / Gamma(alpha)`` for ``alpha > 0``."""
    alpha = float(alpha)
    if not alpha > 0:
        raise DomainError(f"power kernel needs alpha > 0, got {alpha}")
    return Kernel("power", alpha - 1.0, (rgamma(alpha),), (("alpha", alpha),))


def _bessel_coeffs(order: float, sign: float, terms: int) -> tuple[list[float], float]:
    c = rgamma(order + 1.0)
    out = []
    for k in range(terms):
        out.append(c)
        c *= sign / ((k + 1) * (k + 1 + order))
    return out, c


def bessel_j_kernel(nu: float, terms: int = DEFAULT_BESSEL_TERMS) -> Kernel:
    """``t**(nu/2) * J_nu(2 sqrt(t)) = sum (-1)**k t**(k+nu) / (k! Gamma(k+nu+1))``."""
    nu = float(nu)
    if not nu > -1:
        raise DomainError(f"Bessel kernel needs nu > -1, got {nu}")
    coeffs, tail = _bessel_coeffs(nu, -1.0, terms)
    return Kernel("bessel_j_scaled", nu, tuple(coeffs), (("nu", nu),), tail)


def bessel_i_kernel(mu: float, terms: int = DEFAULT_BESSEL_TERMS) -> Kernel:
    """``t**(mu/2) * I_mu(2 sqrt(t)) = sum t**(k+mu) / (k! Gamma(k+mu+1))``."""
    mu = float(mu)
    if not mu > -1:
        raise DomainError(f"Bessel kernel needs mu > -1, got {mu}")
    coeffs, tail = _bessel_coeffs(mu, 1.0, terms)
    return Kernel("bessel_i_scaled", mu, tuple(coeffs), (("mu", mu),), tail)


def make_power_pair(alpha: float, n: int) -> KernelPair:
    """The pair ``(h_alpha, h_{n-alpha})`` of order ``n``; needs ``n-1 < alpha < n``."""
    n = _check_order(n)
    alpha = float(alpha)
    if not n - 1 < alpha < n:
        raise DomainError(
            f"alpha = {alpha:g} is not admissible for order n = {n}: "
            f"alpha must lie in the open interval ({n - 1}, {n})"
        )
    return KernelPair(make_power_kernel(alpha), make_power_kernel(n - alpha), n)


def make_bessel_pair(nu: float, n: int, terms: int = DEFAULT_BESSEL_TERMS) -> KernelPair:
    """``kappa = t**(nu/2) J_nu(2 sqrt t)``, ``k = t**(n/2-nu/2-1) I_{n-nu-2}(2 sqrt t)``.

    Admissible for ``n - 2 < nu < n - 1``.
    """
    n = _check_order(n)
    nu = float(nu)
    if not n - 2 < nu < n - 1:
        raise DomainError(
            f"nu = {nu:g} is not admissible for order n = {n}: "
            f"nu must lie in the open interval ({n - 2}, {n - 1})"
        )
    kappa = bessel_j_kernel(nu, terms)
    k = bessel_i_kernel(n - nu - 2.0, terms)
    return KernelPair(kappa, k, n)


def _check_alpha_unit(alpha: float) -> float:
    alpha = float(alpha)
    if not 0 < alpha < 1:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    return alpha


def solve_associated_coefficients(a: Sequence, alpha: float, N: int) -> list[float]:
    """Coefficients ``b_0..b_N`` of the associate kernel's analytic part.

    ``a`` (zero-padded to length ``N + 1``) and ``b`` are linked by
    ``a_0 b_0 = 1`` and, for ``m >= 1``,
    ``sum_{j=0}^m Gamma(j+1-alpha) Gamma(alpha+m-j) a_{m-j} b_j = 0``,
    which is solved for ``b_m`` by forward substitution.

    The substitution cancels heavily (roughly a factor 3 per index), so it
    runs in 50-digit arithmetic and ``a`` may be given as ``mpmath.mpf``,
    ``Fraction`` or decimal strings.  Double-precision inputs limit the
    relative accuracy of ``b_20`` to about 1e-8 no matter how the sum is done.
    """
    alpha = _check_alpha_unit(alpha)
    N = int(N)
    if N < 0:
        raise DomainError(f"N must be non-negative, got {N}")
    if len(a) == 0 or a[0] == 0:
        raise DomainError("leading coefficient a[0] must be nonzero")
    with mpmath.workdps(_SOLVE_DPS):
        al = mpmath.mpf(alpha)
        a_mp = [_to_mpf(x) for x in a[: N + 1]]
        a_mp += [mpmath.mpf(0)] * max(0, N + 1 - len(a_mp))
        g_b = [mpmath.gamma(j + 1 - al) for j in range(N + 1)]
        g_a = [mpmath.gamma(al + i) for i in range(N + 1)]
        b = [1 / a_mp[0]]
        for m in range(1, N + 1):
            acc = mpmath.fsum(g_b[j] * g_a[m - j] * a_mp[m - j] * b[j] for j in range(m))
            b.append(-acc / (g_b[m] * g_a[0] * a_mp[0]))
        return [float(x) for x in b]


def _to_mpf(x):
    if isinstance(x, Fraction):
        return mpmath.mpf(x.numerator) / x.denominator
    return mpmath.mpf(x)


def make_series_pair(a: Sequence[float], alpha: float, N: int) -> KernelPair:
    """Order-one pair ``kappa = h_alpha * sum a_k t**k``, ``k = h_{1-alpha} * sum b_k t**k``.

    Both series keep ``N`` terms; the next term is stored as the tail.
    """
    alpha = _check_alpha_unit(alpha)
    N = int(N)
    if N < 1:
        raise DomainError(f"N must be at least 1, got {N}")
    b = solve_associated_coefficients(a, alpha, N)
    a_full = [float(_to_mpf(x)) for x in a[: N + 1]] + [0.0] * max(0, N + 1 - len(a))
    ra, rb = rgamma(alpha), rgamma(1.0 - alpha)
    params = (("alpha", alpha), ("N", float(N)))
    kappa = Kernel(
        "series", alpha - 1.0, tuple(x * ra for x in a_full[:N]), params, a_full[N] * ra
    )
    k = Kernel("series", -alpha, tuple(x * rb for x in b[:N]), params, b[N] * rb)
    return KernelPair(kappa, k, 1)


def _exact(kernel: Kernel) -> bool:
    return kernel.n_terms == 1 and kernel.tail_coeff == 0.0


def convolve_series(k1: Kernel, k2: Kernel, family: str = "product", params=()) -> Kernel:
    """Analytic Laplace convolution of two series kernels.

    Uses ``t**a * t**b = B(a+1, b+1) t**(a+b+1)`` term by term.  The result
    keeps as many terms as are exact: all of them when one factor is a
    closed-form single term, otherwise the shorter length.
    """
    if not (k1.integrable and k2.integrable):
        raise DomainError("analytic convolution needs locally integrable kernels")
    p1, p2 = k1.exponent, k2.exponent
    exponent = p1 + p2 + 1.0
    if k1.is_zero or k2.is_zero:
        return Kernel(family, exponent, (0.0,), tuple(params))
    if _exact(k1) or _exact(k2):
        single, other = (k1, k2) if _exact(k1) else (k2, k1)
        c = single.leading_coeff
        ps, po = single.exponent, other.exponent
        coeffs = tuple(
            c * x * beta_fn(ps + 1.0, po + j + 1.0) for j, x in enumerate(other.coeffs)
        )
        tail = c * other.tail_coeff * beta_fn(ps + 1.0, po + other.n_terms + 1.0)
        return Kernel(family, exponent, coeffs, tuple(params), tail)
    terms = min(k1.n_terms, k2.n_terms)
    coeffs = []
    for m in range(terms):
        acc = 0.0
        for i in range(m + 1):
            j = m - i
            acc += k1.coeffs[i] * k2.coeffs[j] * beta_fn(p1 + i + 1.0, p2 + j + 1.0)
        coeffs.append(acc)
    # tail of a truncated product is not tracked termwise; bound via the factors
    tail = abs(k1.tail_coeff) + abs(k2.tail_coeff)
    return Kernel(family, exponent, tuple(coeffs), tuple(params), tail)


def lift_pair(pair: KernelPair, n: int) -> KernelPair:
    """Order-``n`` pair ``(h_{n-1} * kappa, k)`` built from an order-one pair."""
    n = _check_order(n)
    if pair.order != 1:
        raise DomainError(f"lift_pair needs a pair of order 1, got order {pair.order}")
    if n < 2:
        raise DomainError(f"lift_pair target order must be at least 2, got {n}")
    kappa = pair.kappa
    if kappa.family == "power" and kappa._derivative_order() == 0:
        lifted = make_power_kernel(n - 1 + kappa.param("alpha"))
    else:
        base = FAMILIES.index(kappa.family)
        params = (("base_family", float(base)), ("n", float(n))) + kappa.params
        lifted = convolve_series(make_power_kernel(n - 1), kappa, "lifted", params)
    return KernelPair(lifted, pair.k, n)


def kernel_eval(kernel: Kernel, t):
    """Pointwise value; at ``t = 0`` the limit when it is finite."""
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0):
        raise DomainError("kernels are defined for t >= 0 only")
    if np.any(t_arr == 0):
        if not kernel.is_zero and kernel.exponent < 0:
            raise DomainError(
                f"kernel with exponent {kernel.exponent:g} is singular at t = 0"
            )
        out = np.where(t_arr == 0, kernel.value_at_zero(), kernel(np.where(t_arr == 0, 1.0, t_arr)))
        return out if out.ndim else float(out)
    return kernel(t_arr)


def kernel_derivative_eval(kernel: Kernel, m: int, t):
    """``m``-th derivative at ``t > 0``."""
    t_arr = np.asarray(t, dtype=float)
    if m > 0 and np.any(t_arr <= 0):
        raise DomainError("kernel derivatives are evaluated at t > 0 only")
    return kernel_eval(kernel.derivative(m), t)

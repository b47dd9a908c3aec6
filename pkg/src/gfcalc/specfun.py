"""Gamma and Bessel-type special functions used by the kernel families.

The Gamma function uses a fixed-coefficient Lanczos approximation (g = 7,
nine coefficients) with the reflection formula below 1/2.  Bessel functions
are summed from their power series in ascending order, which is stable for
the arguments used here (``2 * sqrt(t) <= 15``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ConvergenceError, DomainError, PoleError

__all__ = [
    "SeriesTolerance",
    "gamma_fn",
    "rgamma",
    "beta_fn",
    "bessel_j",
    "bessel_i",
]

_LANCZOS_G = 7.0
_LANCZOS_COEFFS = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)
_SQRT_2PI = math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class SeriesTolerance:
    """Truncation control for power-series evaluation."""

    rel_tol: float = 1e-15
    max_terms: int = 200

    def __post_init__(self):
        if not self.rel_tol > 0:
            raise DomainError(f"rel_tol must be positive, got {self.rel_tol}")
        if int(self.max_terms) != self.max_terms or self.max_terms < 1:
            raise DomainError(f"max_terms must be a positive integer, got {self.max_terms}")


DEFAULT_TOLERANCE = SeriesTolerance()


def _is_nonpositive_integer(x: float) -> bool:
    return x <= 0 and x == math.floor(x)


def _lanczos(x: float) -> float:
    # valid for x >= 0.5
    x -= 1.0
    acc = _LANCZOS_COEFFS[0]
    for i, c in enumerate(_LANCZOS_COEFFS[1:], start=1):
        acc += c / (x + i)
    t = x + _LANCZOS_G + 0.5
    half = t ** ((x + 0.5) / 2.0)
    return _SQRT_2PI * half * math.exp(-t) * half * acc


def _sin_pi(x: float) -> float:
    # exact argument reduction keeps accuracy near the negative poles
    m = round(x)
    s = math.sin(math.pi * (x - m))
    return -s if m % 2 else s


def gamma_fn(x: float) -> float:
    """Gamma function for real ``x`` away from the poles.

    Positive integers up to 171 return the exact factorial.

    >>> gamma_fn(5)
    24.0
    """
    x = float(x)
    if math.isnan(x):
        raise DomainError("gamma_fn argument is NaN")
    if _is_nonpositive_integer(x):
        raise PoleError(f"Gamma has a pole at x = {x:g}")
    if x == math.floor(x) and x <= 171:
        return float(math.factorial(int(x) - 1))
    if x < 0.5:
        return math.pi / (_sin_pi(x) * _lanczos(1.0 - x))
    return _lanczos(x)


def rgamma(x: float) -> float:
    """Reciprocal Gamma, ``1/Gamma(x)``, which is zero at the poles."""
    x = float(x)
    if _is_nonpositive_integer(x):
        return 0.0
    return 1.0 / gamma_fn(x)


def beta_fn(a: float, b: float) -> float:
    """Euler Beta function ``B(a, b) = Gamma(a) Gamma(b) / Gamma(a + b)``."""
    return gamma_fn(a) * gamma_fn(b) * rgamma(a + b)


def _bessel_series(nu: float, t: float, sign: float, tol: SeriesTolerance) -> float:
    if nu <= -1:
        raise DomainError(f"order nu must exceed -1, got {nu}")
    if t < 0:
        raise DomainError(f"argument must be non-negative, got {t}")
    if t == 0.0:
        if nu == 0:
            return 1.0
        if nu > 0:
            return 0.0
        raise DomainError(f"series of order {nu} < 0 is unbounded at t = 0")
    half = 0.5 * t
    q = sign * half * half
    term = half**nu * rgamma(nu + 1.0)
    total = term
    for k in range(1, tol.max_terms):
        term *= q / (k * (k + nu))
        total += term
        if abs(term) < tol.rel_tol * abs(total):
            return total
    raise ConvergenceError(
        f"Bessel series (nu={nu}, t={t}) not converged after {tol.max_terms} terms"
    )


def bessel_j(nu: float, t: float, tol: SeriesTolerance = DEFAULT_TOLERANCE) -> float:
    """Bessel function of the first kind ``J_nu(t)`` from its power series."""
    return _bessel_series(float(nu), float(t), -1.0, tol)


def bessel_i(nu: float, t: float, tol: SeriesTolerance = DEFAULT_TOLERANCE) -> float:
    """Modified Bessel function ``I_nu(t)`` from its power series."""
    return _bessel_series(float(nu), float(t), 1.0, tol)

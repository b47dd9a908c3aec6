import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gfcalc import functions as fn
from gfcalc.errors import CapabilityError, DomainError
from gfcalc.kernels import make_power_kernel


def test_constant_and_polynomial_initial_values():
    one = fn.constant(1.0)
    assert one.initial_values(3) == [1.0, 0.0, 0.0]
    p = fn.polynomial([2.0, 3.0, 1.0])
    assert p.initial_values(3) == [2.0, 3.0, 2.0]
    assert p.value(2.0) == 12.0


def test_exponential_and_sinusoid_derivatives():
    e = fn.exponential(-2.0, 3.0)
    assert e.initial_values(3) == [3.0, -6.0, 12.0]
    s = fn.sinusoid(2.0)
    assert s.initial_values(4) == [0.0, 2.0, 0.0, -8.0]
    t = np.linspace(0, 1, 5)
    assert np.allclose(s.derivative(1).value(t), 2 * np.cos(2 * t), rtol=1e-15)


def test_tabulated_has_no_derivatives():
    tab = fn.Tabulated([0.0, 0.5, 1.0], [1.0, 2.0, 0.0])
    assert tab.derivative_order_available == 0
    assert tab.value(0.25) == 1.5
    with pytest.raises(CapabilityError):
        tab.derivative(1)
    with pytest.raises(CapabilityError):
        tab.initial_values(1)


@pytest.mark.parametrize("t, v", [([0.0, 0.0, 1.0], [1, 2, 3]), ([0.0], [1.0]), ([0.0, 1.0], [1.0, math.inf])])
def test_tabulated_validation(t, v):
    with pytest.raises(DomainError):
        fn.Tabulated(t, v)


def test_taylor_remainder_vanishes_on_polynomials_of_low_degree():
    p = fn.polynomial([2.0, 3.0, 1.0])
    r = fn.taylor_remainder(p, 2)
    assert r == fn.monomial(2)
    assert fn.taylor_remainder(p, 3) == fn.ZERO


def test_convolution_rule_a_for_smooth_inner():
    # (h_a * g)' = h_a * g' + g(0) h_a
    h = make_power_kernel(0.5)
    d = fn.convolve(h, fn.exponential(1.0)).derivative(1)
    expected = fn.convolve(h, fn.exponential(1.0)) + fn.KernelFunction(h)
    assert d == expected


def test_convolution_rule_b_for_regular_kernel():
    # K with exponent >= 0: (K * g)' = K' * g + K(0) g, g singular
    K = make_power_kernel(1.5)
    g = fn.power_function(0.5)
    d = fn.convolve(K, g).derivative(1)
    # h_1.5 * h_0.5 = h_2 = t, whose derivative is 1
    assert d.leading()[0] == 0.0
    assert d.value_at_zero() == pytest.approx(1.0, rel=1e-14)


def test_convolution_of_two_singular_kernels_differentiates_analytically():
    d = fn.convolve(make_power_kernel(0.3), fn.power_function(0.4)).derivative(1)
    t = np.array([0.2, 0.9])
    # h_0.3 * h_0.4 = h_0.7, whose derivative is t**-1.3 / Gamma(-0.3)
    assert np.allclose(d.value(t), t**-1.3 / math.gamma(-0.3), rtol=1e-13, atol=0)


def test_convolve_rejects_non_integrable_input():
    with pytest.raises(DomainError):
        fn.convolve(make_power_kernel(0.5), fn.KernelFunction(make_power_kernel(0.5).derivative(1)))


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=1, max_size=5), st.floats(-3, 3))
def test_polynomial_arithmetic_matches_pointwise(coeffs, c):
    p = fn.polynomial(coeffs)
    q = fn.monomial(2, 1.5)
    t = np.linspace(0, 2, 9)
    combo = c * p + q - p
    assert np.allclose(np.asarray(combo.value(t)), (c - 1) * np.asarray(p.value(t)) + 1.5 * t**2, atol=1e-12)


def test_combination_value_at_zero_cancels_exactly():
    f = fn.exponential(1.0) - fn.constant(1.0)
    assert f.value_at_zero() == 0.0

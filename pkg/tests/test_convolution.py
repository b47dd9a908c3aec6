import math
import warnings

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gfcalc import functions as fn
from gfcalc.convolution import (
    Grid,
    convolve_kernel_function,
    convolve_kernels,
    laplace_transform,
    make_graded_grid,
    moment_weights,
)
from gfcalc.errors import DomainError, QuadratureError, TailWarning
from gfcalc.kernels import (
    Kernel,
    bessel_j_kernel,
    make_bessel_pair,
    make_power_kernel,
    make_power_pair,
)


# --- grids -------------------------------------------------------------------

def test_grid_examples():
    assert make_graded_grid(1, 2, 1).nodes.tolist() == [0.0, 0.5, 1.0]
    assert make_graded_grid(1, 4, 2).nodes.tolist() == [0.0, 0.0625, 0.25, 0.5625, 1.0]
    assert make_graded_grid(2, 8, 3).nodes[1] == 0.00390625


@pytest.mark.parametrize("args", [(0.0, 4, 2), (1.0, 1, 2), (1.0, 4, 0.5), (1.0, 2.5, 2)])
def test_grid_validation(args):
    with pytest.raises(DomainError):
        Grid(*args)


def test_grid_nodes_are_read_only_and_end_exactly():
    g = make_graded_grid(3.0, 7, 2.5)
    assert g.nodes[-1] == 3.0 and g.nodes[0] == 0.0
    with pytest.raises(ValueError):
        g.nodes[1] = 0.0


# --- moment weights ----------------------------------------------------------

@settings(max_examples=100, deadline=None)
@given(st.floats(-0.95, 3.0), st.floats(1e-6, 1.0), st.floats(0.1, 5.0))
def test_moment_weights_integrate_linear_functions_exactly(p, x, b):
    w_near, w_far = moment_weights(np.array([b]), np.array([x]), p)
    a = b * (1 - x)
    # exact moments of g(u) = 1 and g(u) = u, in extended precision
    with mpmath.workdps(40):
        bm, am, pm = mpmath.mpf(b), mpmath.mpf(b) * (1 - mpmath.mpf(x)), mpmath.mpf(p)
        exact0 = float((bm ** (pm + 1) - am ** (pm + 1)) / (pm + 1))
        exact1 = float((bm ** (pm + 2) - am ** (pm + 2)) / (pm + 2))
    assert w_near[0] + w_far[0] == pytest.approx(exact0, rel=1e-11, abs=1e-300)
    assert w_near[0] * a + w_far[0] * b == pytest.approx(exact1, rel=1e-11, abs=1e-300)


def test_moment_weights_reject_non_integrable_weight():
    with pytest.raises(DomainError):
        moment_weights(np.array([1.0]), np.array([0.5]), -1.0)


# --- kernel against function -------------------------------------------------

def test_constant_kernel_on_constant(grid256):
    res = convolve_kernel_function(make_power_kernel(1.0), fn.constant(1.0), grid256)
    assert np.allclose(res.values, grid256.interior, rtol=1e-14, atol=0)


def test_abel_relation_on_nodes(grid1024):
    res = convolve_kernel_function(make_power_kernel(0.5), fn.power_function(0.5), grid1024)
    t = grid1024.interior
    assert np.max(np.abs(res.values[t >= 0.05] - 1.0)) < 1e-6


def test_piecewise_linear_exactness(grid256):
    res = convolve_kernel_function(make_power_kernel(1.0), fn.monomial(1), grid256)
    t = grid256.interior
    assert np.max(np.abs(res.values - t**2 / 2) / (t**2 / 2)) <= 1e-12
    h = make_power_kernel(0.4)
    res = convolve_kernel_function(h, fn.polynomial([2.0, -3.0]), grid256)
    exact = 2 * t**0.4 / math.gamma(1.4) - 3 * t**1.4 / math.gamma(2.4)
    assert np.max(np.abs(res.values - exact) / np.abs(exact).clip(1e-300)) <= 1e-12 or \
        np.max(np.abs(res.values - exact)) <= 1e-13


def test_tabulated_input_on_grid_nodes_is_exact_for_linear_data(grid256):
    nodes = grid256.nodes
    tab = fn.Tabulated(nodes, 1.0 + 2.0 * nodes)
    res = convolve_kernel_function(make_power_kernel(0.5), tab, grid256)
    t = grid256.interior
    exact = t**0.5 / math.gamma(1.5) + 2 * t**1.5 / math.gamma(2.5)
    assert np.max(np.abs(res.values - exact) / exact) <= 1e-12


def test_non_integrable_kernel_rejected(grid256):
    bad = make_power_kernel(0.5).derivative(1)
    with pytest.raises(DomainError):
        convolve_kernel_function(bad, fn.constant(1.0), grid256)


def test_nonfinite_samples_report_node(grid256):
    from gfcalc.convolution import convolve_samples

    samples = np.ones(grid256.N + 1)
    samples[7] = np.nan
    with pytest.raises(QuadratureError) as info:
        convolve_samples(make_power_kernel(0.5), samples, grid256)
    assert info.value.node_index is not None


# --- kernel against kernel ---------------------------------------------------

def test_kernel_kernel_examples(grid1024):
    t = grid1024.interior
    abel = convolve_kernels(make_power_kernel(0.5), make_power_kernel(0.5), grid1024).values
    assert np.max(np.abs(abel[t >= 0.05] - 1)) < 1e-6
    plain = convolve_kernels(make_power_kernel(1.0), make_power_kernel(1.0), grid1024).values
    assert np.allclose(plain, t, rtol=1e-13, atol=0)
    pair = make_bessel_pair(0.5, 2)
    bes = convolve_kernels(pair.kappa, pair.k, grid1024).values
    assert np.max(np.abs(bes[t >= 0.05] - t[t >= 0.05])) < 1e-6


@pytest.mark.parametrize("a, b", [(0.3, 0.9), (0.5, 0.5), (1.7, 0.2)])
def test_beta_closed_form_refinement_order(a, b):
    errors = []
    Ns = (128, 256, 512, 1024)
    for N in Ns:
        g = make_graded_grid(1.0, N, 2.0)
        t = g.interior
        mask = t >= 0.05
        vals = convolve_kernels(make_power_kernel(a), make_power_kernel(b), g).values
        errors.append(np.max(np.abs(vals[mask] - make_power_kernel(a + b)(t[mask]))))
    if max(errors) < 1e-13:
        return
    order = -np.polyfit(np.log(Ns), np.log(errors), 1)[0]
    assert order >= 1.8


def test_symmetry(grid256):
    k1 = bessel_j_kernel(-0.3)
    k2 = make_power_kernel(0.4)
    ab = convolve_kernels(k1, k2, grid256).values
    ba = convolve_kernels(k2, k1, grid256).values
    assert np.max(np.abs(ab - ba)) < 1e-5


def test_determinism(grid256):
    pair = make_power_pair(0.5, 1)
    from gfcalc.convolution import kernel_convolution_values

    first = kernel_convolution_values(pair.kappa, pair.k, grid256)
    again = convolve_kernels(pair.kappa, pair.k, grid256).values
    assert np.array_equal(first, again)
    f = fn.sinusoid(1.0)
    a = convolve_kernel_function(pair.kappa, f, grid256).values
    fn.clear_cache()
    b = convolve_kernel_function(pair.kappa, f, grid256).values
    assert np.array_equal(a, b)


# --- Laplace -----------------------------------------------------------------

def test_laplace_examples():
    # second-order quadrature of the exponential factor on the default mesh
    assert laplace_transform(make_power_kernel(1.0), 2.0, T_max=40).value == pytest.approx(0.5, abs=1e-6)
    assert laplace_transform(make_power_kernel(0.5), 1.0).value == pytest.approx(1.0, abs=1e-6)
    bes = laplace_transform(bessel_j_kernel(0.5), 2.0).value
    assert bes == pytest.approx(2**-1.5 * math.exp(-0.5), abs=1e-6)


def test_laplace_rejects_small_p():
    with pytest.raises(DomainError):
        laplace_transform(make_power_kernel(0.5), 0.5)


def test_laplace_tail_warning_on_short_truncation():
    with pytest.warns(TailWarning):
        res = laplace_transform(make_power_kernel(1.0), 1.0, T_max=5.0)
    assert res.tail_warning and res.tail_estimate > 1e-10


def test_laplace_default_truncation_is_quiet():
    with warnings.catch_warnings():
        warnings.simplefilter("error", TailWarning)
        res = laplace_transform(make_power_kernel(0.5), 1.0)
    assert res.t_max == 40.0 and not res.tail_warning

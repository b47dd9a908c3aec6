import json

import numpy as np
import pytest

from gfcalc import functions as fn
from gfcalc.convolution import make_graded_grid
from gfcalc.kernels import (
    lift_pair,
    make_bessel_pair,
    make_power_kernel,
    make_power_pair,
    make_series_pair,
)
from gfcalc.kernels import KernelPair
from gfcalc.verify import (
    CHECKS,
    ResidualReport,
    check_commutativity,
    check_ftc1,
    check_ftc2,
    check_index_law,
    check_laplace_condition,
    check_pair_condition,
    convergence_study,
    default_tolerance,
)

CATALOG = {
    "power n=1": make_power_pair(0.5, 1),
    "power n=2": make_power_pair(1.5, 2),
    "power n=3": make_power_pair(2.4, 3),
    "bessel n=1": make_bessel_pair(-0.3, 1),
    "bessel n=2": make_bessel_pair(0.5, 2),
    "series": make_series_pair([1.0, -1.0], 0.3, 12),
    "lifted bessel": lift_pair(make_bessel_pair(-0.5, 1), 2),
}
INPUTS = {
    "1": fn.constant(1.0),
    "t": fn.monomial(1),
    "t^2": fn.monomial(2),
    "exp": fn.exponential(1.0),
    "sin": fn.sinusoid(1.0),
}


def test_default_tolerances_are_calibrated_values():
    for name in ("pair_condition", "ftc1", "ftc2", "index_law", "laplace_condition"):
        tol = default_tolerance(name)
        assert 0 < tol < 1e-3


# --- pair condition ----------------------------------------------------------

def test_abel_pair_condition():
    report = check_pair_condition(make_power_pair(0.5, 1), make_graded_grid(1.0, 2048, 2.0), tol=1e-4)
    assert report.passed and report.max_abs <= 1e-4
    assert report.nodes.min() >= 0.05


def test_order_two_pair_targets_t(grid1024):
    report = check_pair_condition(make_power_pair(1.5, 2), grid1024, tol=1e-4)
    assert report.passed


def test_mismatched_pair_fails():
    bogus = KernelPair(make_power_kernel(0.3), make_power_kernel(0.3), 1)
    report = check_pair_condition(bogus, make_graded_grid(1.0, 256, 2.0), tol=1e-3)
    assert not report.passed
    assert 0.1 < report.max_abs < 10


@pytest.mark.parametrize("name", list(CATALOG))
def test_every_constructor_passes_default_grid(name):
    report = check_pair_condition(CATALOG[name], tol=1e-3)
    assert report.passed
    # and also at the calibrated tolerance
    assert check_pair_condition(CATALOG[name]).passed


def test_laplace_condition_examples():
    power = check_laplace_condition(make_power_pair(0.5, 1), [2.0], tol=1e-6)
    assert power.passed
    bessel = check_laplace_condition(make_bessel_pair(0.5, 2), tol=1e-4)
    assert bessel.passed and bessel.nodes.tolist() == [1.0, 2.0, 5.0, 10.0]
    sonine = check_laplace_condition(make_bessel_pair(-0.3, 1), [1.0], tol=1e-4)
    assert sonine.passed


# --- fundamental theorems ----------------------------------------------------

def test_ftc_examples(grid1024):
    assert check_ftc1(make_power_pair(0.5, 1), fn.monomial(1), grid1024, tol=1e-4).passed
    lifted = lift_pair(make_power_pair(0.6, 1), 2)
    assert check_ftc1(lifted, fn.monomial(2), grid1024, tol=1e-3).passed
    zero = check_ftc1(make_power_pair(0.5, 1), fn.ZERO, grid1024, tol=1e-12)
    assert zero.max_abs == 0.0
    ftc2 = check_ftc2(make_power_pair(1.5, 2), fn.polynomial([2.0, 3.0, 1.0]), grid1024, tol=1e-3)
    assert ftc2.passed
    const = check_ftc2(make_bessel_pair(0.5, 2), fn.constant(1.0), grid1024, tol=1e-12)
    assert const.max_abs == 0.0
    assert check_ftc2(make_power_pair(0.7, 1), fn.exponential(1.0), grid1024, tol=1e-3).passed


@pytest.mark.parametrize("pair_name", list(CATALOG))
@pytest.mark.parametrize("branch", ["rl", "caputo"])
def test_fundamental_theorems_over_catalog(pair_name, branch, grid1024):
    pair = CATALOG[pair_name]
    for f in INPUTS.values():
        assert check_ftc1(pair, f, grid1024, tol=1e-4, branch=branch).passed
        assert check_ftc2(pair, f, grid1024, tol=1e-4, branch=branch).passed


def test_unknown_branch_rejected(grid256):
    with pytest.raises(ValueError):
        check_ftc1(make_power_pair(0.5, 1), fn.constant(1.0), grid256, branch="hadamard")


# --- index law and commutativity ---------------------------------------------

def test_index_law_examples(grid1024):
    t = grid1024.interior
    assert check_index_law(make_power_kernel(0.5), make_power_kernel(0.5), fn.constant(1.0), grid1024, tol=1e-6).passed
    # h_1, h_1 on t: both routes give t**3/6; the single route is exact, the
    # nested one integrates the quadratic t**2/2 to second order
    single = fn.convolve(make_power_kernel(2.0), fn.monomial(1)).evaluate(grid1024)
    assert np.max(np.abs(single - t**3 / 6)) <= 1e-15
    assert check_index_law(make_power_kernel(1.0), make_power_kernel(1.0), fn.monomial(1), grid1024, tol=1e-6).passed
    assert check_index_law(make_power_kernel(0.3), make_power_kernel(0.9), fn.monomial(1), grid1024, tol=1e-4).passed


def test_index_law_with_series_kernels(grid1024):
    k1 = make_bessel_pair(-0.3, 1).kappa
    k2 = make_power_kernel(0.6)
    assert check_index_law(k1, k2, fn.exponential(1.0), grid1024, tol=1e-4).passed


def test_commutativity(grid1024):
    k1, k2 = make_power_kernel(0.3), make_bessel_pair(0.5, 2).k
    assert check_commutativity(k1, k2, fn.sinusoid(1.0), grid1024, tol=1e-4).passed


# --- reports -----------------------------------------------------------------

def test_report_round_trip_and_determinism(grid256):
    pair = make_series_pair([1.0, -1.0], 0.3, 12)
    one = check_ftc1(pair, fn.exponential(1.0), grid256)
    two = check_ftc1(pair, fn.exponential(1.0), grid256)
    assert one.to_jsonl() == two.to_jsonl()
    back = ResidualReport.from_jsonl(one.to_jsonl())
    assert np.array_equal(back.nodes, one.nodes) and np.array_equal(back.residuals, one.residuals)
    assert (back.max_abs, back.l1, back.passed, back.tolerance_used) == (one.max_abs, one.l1, one.passed, one.tolerance_used)
    head = json.loads(one.to_jsonl().splitlines()[0])
    assert head["check_name"] == "ftc1[rl,n=1]"
    csv_lines = one.to_csv().splitlines()
    assert csv_lines[0] == "t,residual" and len(csv_lines) == one.nodes.size + 1


def test_report_l1_uses_interval_widths(grid256):
    report = check_pair_condition(make_power_pair(0.5, 1), grid256, tol=1.0, t_cut=0.0)
    widths = np.diff(grid256.nodes)
    assert report.l1 == pytest.approx(float(np.sum(np.abs(report.residuals) * widths)), rel=1e-14)


def test_nonfinite_residual_fails():
    report = ResidualReport.build("x", [1.0, 2.0], [0.0, np.nan], tol=1.0)
    assert not report.passed


# --- convergence -------------------------------------------------------------

def test_convergence_of_abel_pair():
    study = convergence_study("abel-pair")
    assert study.order >= 1.8 and study.monotone


def test_exact_case_flags_rounding_level():
    study = convergence_study("exact-linear", (64, 128, 256))
    assert study.order is None and study.flag == "rounding-level"


def test_ftc1_convergence_is_monotone():
    assert convergence_study("ftc1-power", (256, 512, 1024)).monotone


def test_convergence_study_validation():
    with pytest.raises(ValueError):
        convergence_study("abel-pair", (256, 512))
    with pytest.raises(ValueError):
        convergence_study("abel-pair", (512, 256, 1024))
    assert set(CHECKS) >= {"abel-pair", "bessel-pair", "ftc1-power", "exact-linear"}


def test_convergence_study_serialization():
    study = convergence_study("exact-linear", (16, 32, 64))
    lines = study.to_jsonl().splitlines()
    assert json.loads(lines[0])["flag"] == "rounding-level" and len(lines) == 4
    assert study.to_csv().startswith("N,max_abs\n16,")

"""Numerical certification of pair conditions, the two fundamental theorems and operator laws.

Every check returns a :class:`ResidualReport`.  A failed check is a report
with ``passed = False``, never an exception.  Residuals are measured on nodes
``t >= t_cut`` (default ``T/20``), away from the singular corner at the
origin where product integration is least accurate.

Default tolerances come from ``data/tolerances.json``, written by
``scripts/calibrate.py`` from a mesh-refinement run.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from typing import Callable, Sequence

import numpy as np

from .convolution import (
    DEFAULT_GRID,
    Grid,
    kernel_convolution_values,
    laplace_transform,
    make_graded_grid,
)
from .errors import TailWarning
from .functions import FunctionSpec, convolve, taylor_remainder
from .kernels import Kernel, KernelPair, convolve_series, make_power_kernel, make_power_pair
from .operators import gfd_caputo_spec, gfd_rl_spec, gfi_spec

__all__ = [
    "ResidualReport",
    "ConvergenceStudy",
    "default_tolerance",
    "check_pair_condition",
    "check_laplace_condition",
    "check_ftc1",
    "check_ftc2",
    "check_index_law",
    "check_commutativity",
    "convergence_study",
    "CHECKS",
]

ROUNDING_FLOOR = 1e-13


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


@lru_cache(maxsize=1)
def _tolerance_table() -> dict:
    text = resources.files("gfcalc").joinpath("data/tolerances.json").read_text()
    return json.loads(text)["tolerances"]


def default_tolerance(check_name: str) -> float:
    """Calibrated default tolerance for a check family (e.g. ``"pair_condition"``)."""
    return float(_tolerance_table()[check_name])


@dataclass
class ResidualReport:
    """Per-node residuals of one check plus their norms.

    ``l1`` is the weighted sum ``sum |r_i| w_i``; grid checks weight each
    node by the width of the mesh interval to its left, other checks use
    unit weights.
    """

    check_name: str
    nodes: np.ndarray
    residuals: np.ndarray
    max_abs: float
    l1: float
    tolerance_used: float
    passed: bool
    notes: list = field(default_factory=list)

    @classmethod
    def build(cls, name, nodes, residuals, tol, weights=None, notes=()):
        nodes = np.asarray(nodes, dtype=float)
        residuals = np.asarray(residuals, dtype=float)
        w = np.ones_like(residuals) if weights is None else np.asarray(weights, dtype=float)
        if residuals.size:
            max_abs = float(np.max(np.abs(residuals)))
        else:
            max_abs = 0.0
        if not np.all(np.isfinite(residuals)):
            max_abs = math.inf
        l1 = float(np.sum(np.abs(residuals) * w))
        tol = float(tol)
        return cls(name, nodes, residuals, max_abs, l1, tol, bool(max_abs <= tol), list(notes))

    def to_jsonl(self) -> str:
        """Header line with the summary, then one ``{"t", "residual"}`` line per node."""
        head = (
            f'{{"check_name": {json.dumps(self.check_name)}, '
            f'"tolerance_used": {_fmt(self.tolerance_used)}, "max_abs": {_fmt(self.max_abs)}, '
            f'"l1": {_fmt(self.l1)}, "passed": {json.dumps(self.passed)}, '
            f'"n_nodes": {self.nodes.size}, "notes": {json.dumps(self.notes)}}}'
        )
        rows = [
            f'{{"t": {_fmt(t)}, "residual": {_fmt(r)}}}'
            for t, r in zip(self.nodes, self.residuals)
        ]
        return "\n".join([head, *rows]) + "\n"

    @classmethod
    def from_jsonl(cls, text: str) -> "ResidualReport":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        head = json.loads(lines[0])
        rows = [json.loads(ln) for ln in lines[1:]]
        return cls(
            head["check_name"],
            np.array([r["t"] for r in rows], dtype=float),
            np.array([r["residual"] for r in rows], dtype=float),
            float(head["max_abs"]),
            float(head["l1"]),
            float(head["tolerance_used"]),
            bool(head["passed"]),
            list(head.get("notes", [])),
        )

    def to_csv(self) -> str:
        lines = ["t,residual"]
        lines += [f"{_fmt(t)},{_fmt(r)}" for t, r in zip(self.nodes, self.residuals)]
        return "\n".join(lines) + "\n"

    def summary(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (
            f"{status} {self.check_name}: max_abs={self.max_abs:.3e} l1={self.l1:.3e} "
            f"tol={self.tolerance_used:.1e}"
        )


def _window(grid: Grid, t_cut: float | None):
    t = grid.interior
    if t_cut is None:
        t_cut = grid.T / 20.0
    mask = t >= t_cut
    widths = np.diff(grid.nodes)
    return mask, t[mask], widths[mask]


def _grid_report(name, grid, values, target, tol, t_cut, scale=None):
    mask, nodes, widths = _window(grid, t_cut)
    residuals = np.asarray(values)[mask] - np.asarray(target)[mask]
    if scale is not None:
        residuals = residuals / np.asarray(scale)[mask]
    return ResidualReport.build(name, nodes, residuals, tol, widths)


def _tol(tol, name):
    return default_tolerance(name) if tol is None else float(tol)


def check_pair_condition(
    pair: KernelPair,
    grid: Grid = DEFAULT_GRID,
    tol: float | None = None,
    t_cut: float | None = None,
    scaled: bool = False,
) -> ResidualReport:
    """Residual ``(kappa * k)(t_i) - t_i**(n-1)/(n-1)!``.

    With ``scaled=True`` residuals are divided by ``max(1, |target|)``.
    """
    values = kernel_convolution_values(pair.kappa, pair.k, grid)
    target = pair.target(grid.interior)
    scale = np.maximum(1.0, np.abs(target)) if scaled else None
    return _grid_report(
        f"pair_condition[n={pair.order}]",
        grid,
        values,
        target,
        _tol(tol, "pair_condition"),
        t_cut,
        scale,
    )


def check_laplace_condition(
    pair: KernelPair,
    p_values: Sequence[float] = (1.0, 2.0, 5.0, 10.0),
    tol: float | None = None,
    grid_density: int = 4096,
) -> ResidualReport:
    """Residual ``|L[kappa](p) * L[k](p) - p**(-n)|`` at each ``p >= 1``."""
    p_values = [float(p) for p in p_values]
    residuals, notes = [], []
    for p in p_values:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", TailWarning)
            lk = laplace_transform(pair.kappa, p, grid_density=grid_density)
            lkk = laplace_transform(pair.k, p, grid_density=grid_density)
        for w in caught:
            notes.append(f"p={p:g}: {w.message}")
        residuals.append(abs(lk.value * lkk.value - p ** (-pair.order)))
    return ResidualReport.build(
        f"laplace_condition[n={pair.order}]",
        p_values,
        residuals,
        _tol(tol, "laplace_condition"),
        notes=notes,
    )


def check_ftc1(
    pair: KernelPair,
    f: FunctionSpec,
    grid: Grid = DEFAULT_GRID,
    tol: float | None = None,
    branch: str = "rl",
    t_cut: float | None = None,
) -> ResidualReport:
    """Left-inverse property of the derivatives with respect to the integral.

    ``branch="rl"``: residual of ``D I f - f``.
    ``branch="caputo"``: the input is built as ``g = k * f`` (so it has the
    required structure) and the residual is ``*D I g - g``.
    """
    if branch == "rl":
        g = f
        lhs = gfd_rl_spec(pair, gfi_spec(pair, g))
    elif branch == "caputo":
        g = convolve(pair.k, f)
        lhs = gfd_caputo_spec(pair, gfi_spec(pair, g))
    else:
        raise ValueError(f"branch must be 'rl' or 'caputo', got {branch!r}")
    return _grid_report(
        f"ftc1[{branch},n={pair.order}]",
        grid,
        lhs.evaluate(grid),
        g.evaluate(grid),
        _tol(tol, "ftc1"),
        t_cut,
    )


def check_ftc2(
    pair: KernelPair,
    f: FunctionSpec,
    grid: Grid = DEFAULT_GRID,
    tol: float | None = None,
    branch: str = "caputo",
    t_cut: float | None = None,
) -> ResidualReport:
    """Integral applied after the derivative.

    ``branch="caputo"``: residual of ``I *D f - (f - Taylor_{n-1} f)``.
    ``branch="rl"``: the input is built as ``g = kappa * f`` and the residual
    is ``I D g - g``.
    """
    if branch == "caputo":
        lhs = gfi_spec(pair, gfd_caputo_spec(pair, f))
        target = taylor_remainder(f, pair.order)
    elif branch == "rl":
        target = gfi_spec(pair, f)
        lhs = gfi_spec(pair, gfd_rl_spec(pair, target))
    else:
        raise ValueError(f"branch must be 'rl' or 'caputo', got {branch!r}")
    return _grid_report(
        f"ftc2[{branch},n={pair.order}]",
        grid,
        lhs.evaluate(grid),
        target.evaluate(grid),
        _tol(tol, "ftc2"),
        t_cut,
    )


def _plain_power(kernel: Kernel) -> bool:
    return kernel.family == "power" and all(name == "alpha" for name, _ in kernel.params)


def composite_kernel(k1: Kernel, k2: Kernel) -> Kernel:
    """``k1 * k2`` in closed form (``h_a * h_b = h_{a+b}`` for power kernels)."""
    if _plain_power(k1) and _plain_power(k2):
        return make_power_kernel(k1.param("alpha") + k2.param("alpha"))
    return convolve_series(k1, k2)


def check_index_law(
    k1: Kernel,
    k2: Kernel,
    f: FunctionSpec,
    grid: Grid = DEFAULT_GRID,
    tol: float | None = None,
    t_cut: float | None = None,
) -> ResidualReport:
    """Residual of ``I_{k1} I_{k2} f - I_{k1*k2} f`` with ``k1*k2`` in closed form."""
    nested = convolve(k1, convolve(k2, f))
    single = convolve(composite_kernel(k1, k2), f)
    return _grid_report(
        "index_law", grid, nested.evaluate(grid), single.evaluate(grid), _tol(tol, "index_law"), t_cut
    )


def check_commutativity(
    k1: Kernel,
    k2: Kernel,
    f: FunctionSpec,
    grid: Grid = DEFAULT_GRID,
    tol: float | None = None,
    t_cut: float | None = None,
) -> ResidualReport:
    """Residual of ``I_{k1} I_{k2} f - I_{k2} I_{k1} f``."""
    a = convolve(k1, convolve(k2, f)).evaluate(grid)
    b = convolve(k2, convolve(k1, f)).evaluate(grid)
    return _grid_report("commutativity", grid, a, b, _tol(tol, "index_law"), t_cut)


@dataclass
class ConvergenceStudy:
    """Errors per ``N`` and the fitted order ``-d log(err) / d log(N)``."""

    check_name: str
    rows: list
    order: float | None
    flag: str | None = None

    @property
    def monotone(self) -> bool:
        errs = [e for _, e in self.rows]
        return all(b < a for a, b in zip(errs, errs[1:]))

    def to_jsonl(self) -> str:
        order = "null" if self.order is None else _fmt(self.order)
        head = (
            f'{{"check_name": {json.dumps(self.check_name)}, "order": {order}, '
            f'"flag": {json.dumps(self.flag)}, "monotone": {json.dumps(self.monotone)}}}'
        )
        rows = [f'{{"N": {n}, "max_abs": {_fmt(e)}}}' for n, e in self.rows]
        return "\n".join([head, *rows]) + "\n"

    def to_csv(self) -> str:
        return "N,max_abs\n" + "".join(f"{n},{_fmt(e)}\n" for n, e in self.rows)


def _abel_pair(grid: Grid) -> ResidualReport:
    return check_pair_condition(make_power_pair(0.5, 1), grid, tol=1e-4)


def _bessel_pair(grid: Grid) -> ResidualReport:
    from .kernels import make_bessel_pair

    return check_pair_condition(make_bessel_pair(0.5, 2), grid, tol=1e-3, scaled=True)


def _ftc1_power(grid: Grid) -> ResidualReport:
    from .functions import exponential

    return check_ftc1(make_power_pair(0.5, 1), exponential(1.0), grid, tol=1e-3)


def _exact_linear(grid: Grid) -> ResidualReport:
    # constant analytic part against an affine function: exact to rounding
    from .functions import monomial

    values = convolve(make_power_kernel(1.0), monomial(1)).evaluate(grid)
    return _grid_report("exact_linear", grid, values, grid.interior**2 / 2, 1e-12, 0.0)


CHECKS: dict[str, Callable[[Grid], ResidualReport]] = {
    "abel-pair": _abel_pair,
    "bessel-pair": _bessel_pair,
    "ftc1-power": _ftc1_power,
    "exact-linear": _exact_linear,
}


def convergence_study(
    check,
    N_values: Sequence[int] = (256, 512, 1024, 2048),
    T: float = 1.0,
    r: float = 2.0,
) -> ConvergenceStudy:
    """Run ``check`` (a name in :data:`CHECKS` or a ``Grid -> ResidualReport``
    callable) on refined grids and fit the convergence order.

    When every error sits at rounding level the fit is skipped and ``flag``
    is ``"rounding-level"``.
    """
    N_values = [int(n) for n in N_values]
    if len(N_values) < 3:
        raise ValueError("a convergence study needs at least three values of N")
    if any(b <= a for a, b in zip(N_values, N_values[1:])):
        raise ValueError("N_values must be strictly increasing")
    fn = CHECKS[check] if isinstance(check, str) else check
    name = check if isinstance(check, str) else getattr(check, "__name__", "custom")
    rows = []
    for n in N_values:
        report = fn(make_graded_grid(T, n, r))
        rows.append((n, report.max_abs))
    errs = np.array([e for _, e in rows])
    if np.all(errs < ROUNDING_FLOOR):
        return ConvergenceStudy(name, rows, None, "rounding-level")
    slope = np.polyfit(np.log(N_values), np.log(np.maximum(errs, 1e-300)), 1)[0]
    return ConvergenceStudy(name, rows, float(-slope))

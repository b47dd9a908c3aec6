"""Mesh-refinement run that fixes the default tolerances of gfcalc.verify.

For every check family the worst residual over a catalog of pairs and inputs
is recorded on refined grids; the default tolerance is ten times the worst
residual on the default grid, rounded up to one significant digit.

    python scripts/calibrate.py            # rewrites src/gfcalc/data/tolerances.json
"""

from __future__ import annotations

import json
import math
import time
from pathlib import Path

import numpy as np

from gfcalc import functions as fn
from gfcalc.convolution import DEFAULT_GRID, make_graded_grid
from gfcalc.kernels import (
    lift_pair,
    make_bessel_pair,
    make_power_kernel,
    make_power_pair,
    make_series_pair,
)
from gfcalc.verify import (
    check_ftc1,
    check_ftc2,
    check_index_law,
    check_laplace_condition,
    check_pair_condition,
)

OUT = Path(__file__).resolve().parents[1] / "src" / "gfcalc" / "data" / "tolerances.json"
N_VALUES = (256, 512, 1024, 2048)
INF = math.inf


def catalog():
    return {
        "power(0.5,1)": make_power_pair(0.5, 1),
        "power(1.5,2)": make_power_pair(1.5, 2),
        "power(2.4,3)": make_power_pair(2.4, 3),
        "bessel(-0.3,1)": make_bessel_pair(-0.3, 1),
        "bessel(0.5,2)": make_bessel_pair(0.5, 2),
        "series([1,-1],0.3,12)": make_series_pair([1, -1], 0.3, 12),
        "lift(bessel(-0.5,1),2)": lift_pair(make_bessel_pair(-0.5, 1), 2),
    }


FUNCTIONS = {
    "1": fn.constant(1.0),
    "t": fn.monomial(1),
    "t^2": fn.monomial(2),
    "exp": fn.exponential(1.0),
    "sin": fn.sinusoid(1.0),
}


def round_up(x: float) -> float:
    if x <= 0:
        return 1e-12
    e = math.floor(math.log10(x))
    m = math.ceil(x / 10**e)
    return float(f"{m}e{e}")


def worst(run, grids):
    return {g.N: max(run(g)) for g in grids}


def fitted_order(errs: dict) -> float | None:
    ns = sorted(errs)
    e = np.array([errs[n] for n in ns])
    if np.any(e <= 1e-13):
        return None
    return float(-np.polyfit(np.log(ns), np.log(e), 1)[0])


def main():
    pairs = catalog()
    grids = [make_graded_grid(1.0, n, 2.0) for n in N_VALUES]
    families = {}

    def pair_run(g):
        return [check_pair_condition(p, g, tol=INF).max_abs for p in pairs.values()]

    def ftc_run(check, branches):
        def run(g):
            out = []
            for p in pairs.values():
                for f in FUNCTIONS.values():
                    for b in branches:
                        out.append(check(p, f, g, tol=INF, branch=b).max_abs)
            return out

        return run

    def index_run(g):
        cases = [(0.3, 0.9), (0.5, 0.5), (1.0, 1.0), (0.7, 1.6)]
        return [
            check_index_law(make_power_kernel(a), make_power_kernel(b), f, g, tol=INF).max_abs
            for a, b in cases
            for f in FUNCTIONS.values()
        ]

    runs = {
        "pair_condition": pair_run,
        "ftc1": ftc_run(check_ftc1, ("rl", "caputo")),
        "ftc2": ftc_run(check_ftc2, ("caputo", "rl")),
        "index_law": index_run,
    }
    for name, run in runs.items():
        t0 = time.time()
        errs = worst(run, grids)
        families[name] = {
            "errors_by_N": {str(n): e for n, e in errs.items()},
            "fitted_order": fitted_order(errs),
            "default_grid_error": errs[DEFAULT_GRID.N],
        }
        print(f"{name}: {errs} ({time.time() - t0:.1f}s)")

    lap = {}
    for density in (1024, 2048, 4096, 8192):
        lap[density] = max(
            check_laplace_condition(p, tol=INF, grid_density=density).max_abs
            for p in pairs.values()
        )
    families["laplace_condition"] = {
        "errors_by_N": {str(n): e for n, e in lap.items()},
        "fitted_order": fitted_order(lap),
        "default_grid_error": lap[4096],
    }
    print(f"laplace_condition: {lap}")

    tolerances = {
        name: round_up(10.0 * data["default_grid_error"]) for name, data in families.items()
    }
    payload = {
        "description": (
            "Default tolerances: ten times the worst residual on the default grid "
            "(T=1, N=2048, r=2; Laplace density 4096), rounded up."
        ),
        "tolerances": tolerances,
        "refinement": families,
    }
    OUT.write_text(json.dumps(payload, indent=2) + "\n")
    print(json.dumps(tolerances, indent=2))


if __name__ == "__main__":
    main()

"""Command-line front end: ``gfc <command> [options]``.

Commands
--------
kernels        print the two kernels of a pair as records
apply          apply gfi / gfd_rl / gfd_caputo to a function on a grid
verify-pair    pair-condition residual report
laplace-check  Laplace-domain pair-condition report
ftc-check      first or second fundamental-theorem residual report
converge       mesh-refinement study of a named check

Exit status: 0 success, 1 failed verification (the report is still
written), 2 configuration error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import re
import sys
from pathlib import Path

from . import functions as fn
from .convolution import Grid, SampledResult
from .errors import CapabilityError, DomainError, ParseError
from .kernels import KernelPair, lift_pair, make_bessel_pair, make_power_pair, make_series_pair
from .operators import gfd_caputo, gfd_rl, gfi
from .verify import (
    CHECKS,
    check_ftc1,
    check_ftc2,
    check_laplace_condition,
    check_pair_condition,
    convergence_study,
)

__all__ = ["main", "run", "parse_function", "parse_pair", "parse_grid", "ConfigError"]

EXIT_OK, EXIT_FAILED, EXIT_CONFIG = 0, 1, 2
GRID_ENV = "GFC_DEFAULT_GRID"
COMMANDS = ("kernels", "apply", "verify-pair", "laplace-check", "ftc-check", "converge")
FORMATS = ("csv", "jsonl")


class ConfigError(ValueError):
    """Invalid run configuration; the message names the field."""


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


# ---------------------------------------------------------------- parsing


def _parse_real(text: str, field: str, offset: int = 0) -> float:
    try:
        value = float(text)
    except ValueError:
        raise ParseError(f"{field}: expected a real number, got {text!r}", offset) from None
    if not math.isfinite(value):
        raise ParseError(f"{field}: expected a finite number, got {text!r}", offset)
    return value


def _parse_int(text: str, field: str, offset: int = 0) -> int:
    if not re.fullmatch(r"[+-]?\d+", text.strip()):
        raise ParseError(f"{field}: expected an integer, got {text!r}", offset)
    return int(text)


def _key_values(body: str, offset: int, allowed: tuple[str, ...]) -> dict[str, tuple[str, int]]:
    """``k=v,k=v`` -> {k: (v, position of v)}."""
    out = {}
    pos = offset
    for item in body.split(","):
        if "=" not in item:
            raise ParseError(f"expected key=value, got {item!r}", pos)
        key, value = item.split("=", 1)
        key = key.strip()
        if key not in allowed:
            raise ParseError(f"unknown key {key!r}; expected one of {', '.join(allowed)}", pos)
        if key in out:
            raise ParseError(f"duplicate key {key!r}", pos)
        out[key] = (value.strip(), pos + len(item.split("=", 1)[0]) + 1)
        pos += len(item) + 1
    return out


def _read_table(path: str, offset: int) -> fn.Tabulated:
    try:
        with open(path, newline="") as handle:
            rows = [r for r in csv.reader(handle) if r and any(c.strip() for c in r)]
    except OSError as exc:
        raise ParseError(f"cannot read table {path!r}: {exc.strerror}", offset) from None
    if rows and rows[0][0].strip().lower() == "t":
        rows = rows[1:]
    t, v = [], []
    for i, row in enumerate(rows):
        if len(row) != 2:
            raise ParseError(f"{path}: row {i + 1} must have two columns (t, value)", offset)
        t.append(_parse_real(row[0], f"{path} row {i + 1} t", offset))
        v.append(_parse_real(row[1], f"{path} row {i + 1} value", offset))
    try:
        return fn.Tabulated(t, v)
    except DomainError as exc:
        raise ParseError(f"{path}: {exc}", offset) from None


def parse_function(text: str) -> fn.FunctionSpec:
    """Parse ``one | monomial:m=<int> | poly:c0,c1,... | exp:lambda=<real> |
    sin:omega=<real> | table:<path>``."""
    text = text.strip()
    if text == "one":
        return fn.constant(1.0)
    head, sep, body = text.partition(":")
    start = len(head) + 1
    if not sep:
        raise ParseError(f"unknown function {text!r}", 0)
    if head == "table":
        if not body:
            raise ParseError("table: needs a file path", start)
        return _read_table(body, start)
    if not body:
        raise ParseError(f"{head}: missing arguments", start)
    if head == "poly":
        coeffs, pos = [], start
        for item in body.split(","):
            coeffs.append(_parse_real(item, "poly coefficient", pos))
            pos += len(item) + 1
        return fn.polynomial(coeffs)
    if head == "monomial":
        kv = _key_values(body, start, ("m",))
        if "m" not in kv:
            raise ParseError("monomial: missing m", start)
        m = _parse_int(kv["m"][0], "monomial m", kv["m"][1])
        if m < 0:
            raise ParseError("monomial m must be a non-negative integer", kv["m"][1])
        return fn.monomial(m)
    if head == "exp":
        kv = _key_values(body, start, ("lambda",))
        if "lambda" not in kv:
            raise ParseError("exp: missing lambda", start)
        return fn.exponential(_parse_real(kv["lambda"][0], "exp lambda", kv["lambda"][1]))
    if head == "sin":
        kv = _key_values(body, start, ("omega",))
        if "omega" not in kv:
            raise ParseError("sin: missing omega", start)
        return fn.sinusoid(_parse_real(kv["omega"][0], "sin omega", kv["omega"][1]))
    raise ParseError(f"unknown function kind {head!r}", 0)


_PAIR_KEYS = {
    "power": ("alpha", "n", "lift"),
    "bessel": ("nu", "n", "terms", "lift"),
    "series": ("alpha", "N", "a", "lift"),
}


def parse_pair(text: str) -> KernelPair:
    """Parse ``power:alpha=..,n=..``, ``bessel:nu=..,n=..[,terms=..]`` or
    ``series:alpha=..,N=..,a=c0;c1;...``; any of them takes ``lift=<n>``."""
    text = text.strip()
    family, sep, body = text.partition(":")
    if family not in _PAIR_KEYS:
        raise ParseError(f"unknown pair family {family!r}; expected power, bessel or series", 0)
    if not sep or not body:
        raise ParseError(f"{family}: missing parameters", len(family))
    kv = _key_values(body, len(family) + 1, _PAIR_KEYS[family])

    def need(key):
        if key not in kv:
            raise ParseError(f"{family}: missing {key}", len(family) + 1)
        return kv[key]

    if family == "power":
        alpha, alpha_pos = need("alpha")
        n, n_pos = need("n")
        pair = make_power_pair(_parse_real(alpha, "alpha", alpha_pos), _parse_int(n, "n", n_pos))
    elif family == "bessel":
        terms = {}
        if "terms" in kv:
            terms["terms"] = _parse_int(kv["terms"][0], "terms", kv["terms"][1])
        pair = make_bessel_pair(
            _parse_real(need("nu")[0], "nu", need("nu")[1]),
            _parse_int(need("n")[0], "n", need("n")[1]),
            **terms,
        )
    else:
        a_text, a_pos = need("a")
        a, pos = [], a_pos
        for item in a_text.split(";"):
            a.append(_parse_real(item, "a coefficient", pos))
            pos += len(item) + 1
        pair = make_series_pair(
            a,
            _parse_real(need("alpha")[0], "alpha", need("alpha")[1]),
            _parse_int(need("N")[0], "N", need("N")[1]),
        )
    if "lift" in kv:
        pair = lift_pair(pair, _parse_int(kv["lift"][0], "lift", kv["lift"][1]))
    return pair


def parse_grid(text: str | None) -> Grid:
    """``T=1,N=1024,r=2`` (any subset).  Missing fields come from the
    ``GFC_DEFAULT_GRID`` environment variable (``T,N,r``), then T=1, N=2048, r=2."""
    base = {"T": 1.0, "N": 2048, "r": 2.0}
    env = os.environ.get(GRID_ENV)
    if env:
        parts = [p.strip() for p in env.split(",")]
        if len(parts) != 3:
            raise ConfigError(f"{GRID_ENV} must be 'T,N,r', got {env!r}")
        try:
            base = {"T": float(parts[0]), "N": int(parts[1]), "r": float(parts[2])}
        except ValueError:
            raise ConfigError(f"{GRID_ENV} must be 'T,N,r', got {env!r}") from None
    if text:
        kv = _key_values(text, 0, ("T", "N", "r"))
        for key, (value, pos) in kv.items():
            base[key] = _parse_int(value, "grid N", pos) if key == "N" else _parse_real(value, f"grid {key}", pos)
    return Grid(float(base["T"]), int(base["N"]), float(base["r"]))


def _parse_list(text, field, cast):
    if isinstance(text, (list, tuple)):
        items = list(text)
    else:
        items = [x for x in str(text).split(",") if x.strip()]
    try:
        return [cast(x) for x in items]
    except (TypeError, ValueError):
        raise ConfigError(f"{field}: expected a comma-separated list, got {text!r}") from None


# ---------------------------------------------------------------- config

_OPTIONS = {
    # dest: (flag, help)
    "pair": ("--pair", "kernel pair, e.g. power:alpha=0.5,n=1"),
    "fn": ("--fn", "function: one | monomial:m=<int> | poly:c0,c1,... | exp:lambda=<x> | sin:omega=<x> | table:<path>"),
    "grid": ("--grid", "grid T=..,N=..,r=.. (default from $GFC_DEFAULT_GRID, else T=1,N=2048,r=2)"),
    "op": ("--op", "operator for apply: gfi, gfd_rl or gfd_caputo"),
    "format": ("--format", "output format: csv or jsonl (default csv)"),
    "output": ("--output", "output file (default stdout)"),
    "tol": ("--tol", "tolerance override (default: calibrated)"),
    "t_cut": ("--t-cut", "residuals are measured on t >= t_cut (default T/20)"),
    "p": ("--p", "comma-separated Laplace arguments, each >= 1 (default 1,2,5,10)"),
    "density": ("--density", "Laplace quadrature mesh size (default 4096)"),
    "theorem": ("--theorem", "fundamental theorem to check: 1 or 2"),
    "branch": ("--branch", "rl or caputo"),
    "check": ("--check", f"converge: one of {', '.join(CHECKS)}"),
    "N_values": ("--N-values", "converge: increasing list of N (default 256,512,1024,2048)"),
    "scaled": ("--scaled", "verify-pair: divide residuals by max(1, |target|)"),
}
CONFIG_KEYS = ("command", *_OPTIONS)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gfc", description="General fractional integrals and derivatives.")
    parser.add_argument("command", nargs="?", choices=COMMANDS)
    parser.add_argument("--config", help="JSON file with any of the option names as keys; flags win")
    for dest, (flag, help_text) in _OPTIONS.items():
        if dest == "scaled":
            parser.add_argument(flag, dest=dest, action="store_true", default=None, help=help_text)
        else:
            parser.add_argument(flag, dest=dest, default=None, help=help_text)
    return parser


def _load_config(path: str) -> dict:
    try:
        data = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"config: cannot read {path!r}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config: invalid JSON in {path!r}: {exc.msg} (line {exc.lineno})") from None
    if not isinstance(data, dict):
        raise ConfigError("config: top level must be a JSON object")
    normalized = {k.replace("-", "_"): v for k, v in data.items()}
    unknown = sorted(set(normalized) - set(CONFIG_KEYS))
    if unknown:
        raise ConfigError(f"config: unknown key(s) {', '.join(unknown)}; allowed: {', '.join(CONFIG_KEYS)}")
    return normalized


def resolve_config(argv) -> dict:
    """Merge the config file (if any) with command-line flags; flags win."""
    args = _build_parser().parse_args(argv)
    config = _load_config(args.config) if args.config else {}
    for key in CONFIG_KEYS:
        value = getattr(args, key)
        if value is not None:
            config[key] = value
    if config.get("command") not in COMMANDS:
        raise ConfigError(f"command: expected one of {', '.join(COMMANDS)}, got {config.get('command')!r}")
    return config


# ---------------------------------------------------------------- running


def _required(config, key):
    if config.get(key) in (None, ""):
        raise ConfigError(f"{key}: required for command {config['command']!r}")
    return config[key]


def _real(config, key, default=None):
    value = config.get(key, default)
    if value is None:
        return None
    try:
        return float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{key}: expected a real number, got {value!r}") from None


def _choice(config, key, choices, default=None):
    value = config.get(key, default)
    value = None if value is None else str(value)
    if value not in choices:
        raise ConfigError(f"{key}: expected one of {', '.join(choices)}, got {value!r}")
    return value


def _samples_csv(result: SampledResult) -> str:
    return "t,value\n" + "".join(f"{_fmt(t)},{_fmt(v)}\n" for t, v in zip(result.nodes, result.values))


def _samples_jsonl(result: SampledResult) -> str:
    head = json.dumps({"metadata": {k: v for k, v in result.metadata.items()}, "n_nodes": len(result.values)})
    rows = [f'{{"t": {_fmt(t)}, "value": {_fmt(v)}}}' for t, v in zip(result.nodes, result.values)]
    return "\n".join([head, *rows]) + "\n"


def _kernels_output(pair: KernelPair, fmt: str) -> str:
    roles = (("kappa", pair.kappa), ("k", pair.k))
    if fmt == "jsonl":
        head = json.dumps({"order": pair.order})
        rows = [f'{{"role": "{role}", "kernel": {kernel.to_record()}}}' for role, kernel in roles]
        return "\n".join([head, *rows]) + "\n"
    lines = ["role,family,exponent,params,coefficients,tail_coeff"]
    for role, kernel in roles:
        params = ";".join(f"{name}={_fmt(v)}" for name, v in kernel.params)
        coeffs = ";".join(_fmt(c) for c in kernel.coeffs)
        lines.append(
            f"{role},{kernel.family},{_fmt(kernel.exponent)},{params},{coeffs},{_fmt(kernel.tail_coeff)}"
        )
    return "\n".join(lines) + "\n"


def _execute(config: dict) -> tuple[str, int, str | None]:
    """Returns (output text, exit status, summary line for stderr)."""
    command = config["command"]
    fmt = _choice(config, "format", FORMATS, "csv")
    if command == "converge":
        check = _choice(config, "check", tuple(CHECKS))
        n_values = _parse_list(config.get("N_values", "256,512,1024,2048"), "N_values", int)
        grid = parse_grid(config.get("grid"))
        study = convergence_study(check, n_values, T=grid.T, r=grid.r)
        text = study.to_jsonl() if fmt == "jsonl" else study.to_csv()
        order = "n/a" if study.order is None else f"{study.order:.3f}"
        return text, EXIT_OK, f"{check}: fitted order {order}" + (f" ({study.flag})" if study.flag else "")

    pair = parse_pair(str(_required(config, "pair")))
    if command == "kernels":
        return _kernels_output(pair, fmt), EXIT_OK, None
    tol = _real(config, "tol")
    if command == "laplace-check":
        p_values = _parse_list(config.get("p", "1,2,5,10"), "p", float)
        density = int(_real(config, "density", 4096))
        report = check_laplace_condition(pair, p_values, tol, grid_density=density)
    else:
        grid = parse_grid(config.get("grid"))
        t_cut = _real(config, "t_cut")
        if command == "verify-pair":
            report = check_pair_condition(pair, grid, tol, t_cut, scaled=bool(config.get("scaled")))
        elif command == "apply":
            op = _choice(config, "op", ("gfi", "gfd_rl", "gfd_caputo"))
            f = parse_function(str(_required(config, "fn")))
            result = {"gfi": gfi, "gfd_rl": gfd_rl, "gfd_caputo": gfd_caputo}[op](pair, f, grid)
            text = _samples_jsonl(result) if fmt == "jsonl" else _samples_csv(result)
            return text, EXIT_OK, None
        else:  # ftc-check
            theorem = _choice(config, "theorem", ("1", "2"))
            f = parse_function(str(_required(config, "fn")))
            if theorem == "1":
                branch = _choice(config, "branch", ("rl", "caputo"), "rl")
                report = check_ftc1(pair, f, grid, tol, branch=branch, t_cut=t_cut)
            else:
                branch = _choice(config, "branch", ("rl", "caputo"), "caputo")
                report = check_ftc2(pair, f, grid, tol, branch=branch, t_cut=t_cut)
    text = report.to_jsonl() if fmt == "jsonl" else report.to_csv()
    return text, EXIT_OK if report.passed else EXIT_FAILED, report.summary()


def run(config: dict, stdout=None, stderr=None) -> int:
    """Execute one resolved configuration and return the exit status."""
    stdout = sys.stdout if stdout is None else stdout
    stderr = sys.stderr if stderr is None else stderr
    try:
        text, status, summary = _execute(config)
    except (ConfigError, ParseError, DomainError, CapabilityError) as exc:
        print(f"gfc: error: {exc}", file=stderr)
        return EXIT_CONFIG
    output = config.get("output")
    if output:
        try:
            Path(output).write_text(text)
        except OSError as exc:
            print(f"gfc: error: output: cannot write {output!r}: {exc.strerror}", file=stderr)
            return EXIT_CONFIG
    else:
        stdout.write(text)
    if summary:
        print(summary, file=stderr)
    return status


def main(argv=None) -> int:
    try:
        config = resolve_config(argv)
    except ConfigError as exc:
        print(f"gfc: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return run(config)


if __name__ == "__main__":
    sys.exit(main())

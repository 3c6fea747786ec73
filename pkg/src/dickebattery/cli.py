"""Command-line runner.

Exit codes: 0 success, 1 configuration error, 2 numerical failure.
"""
from __future__ import annotations

import argparse
import ast
import configparser
import json
import math
import operator
import sys
from dataclasses import replace

from . import golden
from .experiments import (
    Scenario,
    Sweep,
    SweepPointError,
    power_scaling,
    quench_protocols,
    run_dynamics,
    run_steady_sweep,
)
from .output import FORMATS, emit, to_csv_text

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2

_OPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul, ast.Div: operator.truediv}


class ConfigError(ValueError):
    pass


def parse_number(text) -> float:
    """Float or simple arithmetic in ``pi`` (``pi/3``, ``-0.46*pi``, ``2*pi/3``)."""
    if isinstance(text, (int, float)):
        return float(text)

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.Name) and node.id == "pi":
            return math.pi
        if isinstance(node, ast.Name) and node.id == "inf":
            return math.inf
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            v = ev(node.operand)
            return -v if isinstance(node.op, ast.USub) else v
        if isinstance(node, ast.BinOp) and type(node.op) in _OPS:
            return _OPS[type(node.op)](ev(node.left), ev(node.right))
        raise ConfigError(f"cannot parse number {text!r}")

    try:
        return ev(ast.parse(str(text).strip(), mode="eval"))
    except (SyntaxError, ZeroDivisionError) as exc:
        raise ConfigError(f"cannot parse number {text!r}") from exc


def parse_sweep(text: str) -> Sweep:
    """``axis:start:stop:count`` or ``none``."""
    parts = str(text).split(":")
    if parts == ["none"]:
        return Sweep()
    if len(parts) != 4:
        raise ConfigError(f"sweep must look like axis:start:stop:count, got {text!r}")
    axis, start, stop, count = parts
    n = parse_number(count)
    if n != int(n):
        raise ConfigError(f"sweep count must be an integer, got {count!r}")
    try:
        return Sweep(axis.strip(), parse_number(start), parse_number(stop), int(n))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


# option name -> (Scenario field, converter)
_FIELDS = {
    "nc": ("n_c", lambda s: _integer(s, "nc")),
    "nb": ("n_b", lambda s: _integer(s, "nb")),
    "theta": ("theta", parse_number),
    "phi": ("phi", parse_number),
    "delta": ("delta", parse_number),
    "r": ("r", parse_number),
    "varphi": ("varphi", parse_number),
    "gamma": ("gamma", parse_number),
    "tq": ("t_q", parse_number),
    "t_end": ("t_end", parse_number),
    "grid": ("grid", lambda s: _integer(s, "grid")),
    "sweep": ("sweep", parse_sweep),
}
_RUN_KEYS = ("out", "format", "workers")


def _integer(text, name) -> int:
    v = parse_number(text)
    if v != int(v):
        raise ConfigError(f"{name} must be an integer, got {text!r}")
    return int(v)


def read_config(path) -> dict:
    """Keys from the ``[scenario]`` section (and ``[run]`` for output options)."""
    cp = configparser.ConfigParser()
    try:
        with open(path) as fh:
            cp.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    raw = {}
    for section in ("scenario", "run"):
        if cp.has_section(section):
            for key, value in cp.items(section):
                key = key.replace("-", "_")
                if key not in _FIELDS and key not in _RUN_KEYS:
                    raise ConfigError(f"unknown config key {key!r} in [{section}]")
                raw[key] = value
    unknown = [s for s in cp.sections() if s not in ("scenario", "run")]
    if unknown:
        raise ConfigError(f"unknown config section(s) {unknown}")
    return raw


def build_scenario(options: dict) -> Scenario:
    kw = {}
    for key, (name, conv) in _FIELDS.items():
        if options.get(key) is not None:
            kw[name] = conv(options[key])
    try:
        return Scenario(**kw)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors; that code is reserved for numerical failures
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="INI file with [scenario] / [run] sections; flags override it")
    p.add_argument("--nc", help="charger spins")
    p.add_argument("--nb", help="battery spins")
    p.add_argument("--theta", help="charger polar angle (accepts e.g. pi/3)")
    p.add_argument("--phi", help="charger azimuthal phase")
    p.add_argument("--delta", help="relative phase; overrides --phi/--varphi")
    p.add_argument("--r", help="squeezing strength")
    p.add_argument("--varphi", help="squeezing phase")
    p.add_argument("--gamma", help="decay rate (default 1)")
    p.add_argument("--tq", help="quench time (inf = continuous squeezing)")
    p.add_argument("--t-end", dest="t_end", help="final time")
    p.add_argument("--grid", help="number of output times")
    p.add_argument("--sweep", help="axis:start:stop:count with axis in none, theta, delta, r, n")
    p.add_argument("--out", help="output path stem; CSV goes to stdout when omitted")
    p.add_argument("--format", action="append", choices=FORMATS, help="repeatable; svg also writes the CSV")
    p.add_argument("--workers", help="processes for sweep points (default 1)")


def make_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dickebattery", description="Collective-spin battery charged through a squeezed reservoir.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, help_ in (
        ("steady", "steady-state metrics at one point or along a sweep"),
        ("evolve", "time series of battery metrics plus power maxima"),
        ("sweep", "steady-state metrics along --sweep (required)"),
        ("power-scaling", "maximum charging power along a sweep (default n:1:6:6)"),
        ("quench", "continuous, quenched and vacuum protocols"),
    ):
        _common(sub.add_parser(name, help=help_))
    g = sub.add_parser("golden-check", help="regenerate pinned tables and compare at 1e-8 relative")
    g.add_argument("--regenerate", action="store_true", help="overwrite the pinned tables instead")
    g.add_argument("--case", action="append", choices=sorted(golden.CASES), help="restrict to a case (repeatable)")
    g.add_argument("--dir", default=str(golden.GOLDEN_DIR), help="golden directory")
    return parser


def _merge(args) -> dict:
    opts = read_config(args.config) if args.config else {}
    for key in list(_FIELDS) + list(_RUN_KEYS):
        v = getattr(args, key, None)
        if v is not None:
            opts[key] = v
    # an explicit delta in either place wins over the phase pair
    if opts.get("delta") is not None:
        opts["phi"] = None
        opts["varphi"] = None
    return opts


def _write(table, opts, sidecar=None, stem_suffix=""):
    fmts = opts.get("format") or ["csv"]
    if isinstance(fmts, str):
        fmts = [f.strip() for f in fmts.split(",")]
    out = opts.get("out")
    if out is None:
        sys.stdout.write(to_csv_text(table))
        if sidecar:
            sys.stdout.write(json.dumps(sidecar) + "\n")
        return []
    try:
        return emit(table, str(out) + stem_suffix, fmts, sidecar=sidecar)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _run(args) -> int:
    if args.command == "golden-check":
        if args.regenerate:
            for p in golden.regenerate(args.case, args.dir):
                print(f"wrote {p}")
            return EXIT_OK
        results = golden.check(args.case, args.dir)
        for r in results:
            status = "ok" if r.ok else "FAIL"
            print(f"{status:4s} {r.name} max_rel_err={r.max_rel_err:.3e} {r.message}".rstrip())
        return EXIT_OK if all(r.ok for r in results) else EXIT_NUMERIC

    opts = _merge(args)
    workers = _integer(opts.get("workers", 1), "workers")
    if args.command == "power-scaling" and opts.get("sweep") is None:
        opts["sweep"] = "n:1:6:6"
    scenario = build_scenario(opts)

    if args.command in ("steady", "sweep"):
        if args.command == "sweep" and scenario.sweep.axis == "none":
            raise ConfigError("sweep needs --sweep axis:start:stop:count")
        _write(run_steady_sweep(scenario, workers), opts)
    elif args.command == "evolve":
        if scenario.sweep.axis != "none":
            raise ConfigError("evolve runs a single scenario; drop --sweep")
        table = run_dynamics(scenario)
        _write(table, opts, sidecar=table.meta)
    elif args.command == "power-scaling":
        if scenario.sweep.axis == "none":
            raise ConfigError("power-scaling needs a sweep axis")
        _write(power_scaling(scenario, workers), opts)
    elif args.command == "quench":
        t_q = scenario.t_q if math.isfinite(scenario.t_q) else 0.5
        scenario = replace(scenario, t_q=t_q)
        for name, table in quench_protocols(scenario).items():
            _write(table, opts, sidecar=table.meta, stem_suffix="." + name)
    return EXIT_OK


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        return _run(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SweepPointError as exc:
        print(f"numerical failure at {exc.axis}={exc.value}: {exc.cause}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"cannot write output: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())

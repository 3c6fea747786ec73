"""Pinned reference tables and their regeneration check."""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .experiments import Scenario, Sweep, power_scaling, quench_protocols, run_dynamics, run_steady_sweep
from .output import read_csv, to_csv_text

GOLDEN_DIR = Path(__file__).with_name("golden")
RTOL = 1e-8
ATOL = 1e-12  # floor for entries that are zero up to round-off

PI = math.pi
_DYN = dict(t_end=6.0, grid=241)


def _steady(**kw):
    return lambda: {"": run_steady_sweep(Scenario(**kw))}


def _dynamics(**kw):
    return lambda: {"": run_dynamics(Scenario(**kw, **_DYN))}


def _quench(**kw):
    def run():
        return {"." + k: v for k, v in quench_protocols(Scenario(**kw, **_DYN), t_q=0.5).items()}

    return run


def _scaling(**kw):
    return lambda: {"": power_scaling(Scenario(**kw, sweep=Sweep("n", 1, 6, 6), **_DYN))}


CASES = {
    "steady_n1_theta": _steady(r=0.5, delta=0.0, sweep=Sweep("theta", 0.0, PI, 41)),
    "steady_n4_theta": _steady(n_c=4, n_b=4, r=0.5, delta=0.0, sweep=Sweep("theta", 0.0, PI, 41)),
    "steady_n4_delta": _steady(n_c=4, n_b=4, r=0.5, theta=PI / 3, sweep=Sweep("delta", -PI, PI, 41)),
    "dynamics_n4_theta0_vacuum": _dynamics(n_c=4, n_b=4, theta=0.0, r=0.0, delta=0.0),
    "dynamics_n4_theta0_squeezed": _dynamics(n_c=4, n_b=4, theta=0.0, r=0.5, delta=0.0),
    "dynamics_n4_coherent_vacuum": _dynamics(n_c=4, n_b=4, theta=PI / 3, r=0.0, delta=0.0),
    "dynamics_n4_coherent_squeezed": _dynamics(n_c=4, n_b=4, theta=PI / 3, r=0.5, delta=0.0),
    "protocols_n4": _quench(n_c=4, n_b=4, theta=PI / 3, r=0.5, delta=0.0),
    "power_vs_n_baseline": _scaling(theta=0.0, r=0.0, delta=0.0),
    "power_vs_n_coherent_squeezed": _scaling(theta=PI / 3, r=0.5, delta=0.0),
}


@dataclass(frozen=True)
class GoldenResult:
    name: str
    ok: bool
    max_rel_err: float
    message: str = ""


def generate(names=None) -> dict:
    """Run the named cases (all by default); returns ``{file stem: table}``."""
    tables = {}
    for name in names or CASES:
        if name not in CASES:
            raise KeyError(f"unknown golden case {name!r}")
        for suffix, table in CASES[name]().items():
            tables[name + suffix] = table
    return tables


def compare(expected: np.ndarray, actual: np.ndarray, rtol: float = RTOL, atol: float = ATOL) -> float:
    """Largest ``|a - e| / (rtol max(|a|,|e|) + atol)`` scaled back by ``rtol``; ``<= rtol`` passes."""
    if expected.shape != actual.shape:
        return math.inf
    scale = rtol * np.maximum(np.abs(expected), np.abs(actual)) + atol
    return float(np.max(np.abs(actual - expected) / scale, initial=0.0)) * rtol


def check(names=None, directory=GOLDEN_DIR) -> list[GoldenResult]:
    results = []
    for stem, table in generate(names).items():
        path = Path(directory) / f"{stem}.csv"
        if not path.exists():
            results.append(GoldenResult(stem, False, math.inf, f"missing {path.name}"))
            continue
        ref = read_csv(path)
        if ref.columns != table.columns:
            results.append(GoldenResult(stem, False, math.inf, "column mismatch"))
            continue
        err = compare(ref.data, table.data)
        results.append(GoldenResult(stem, err <= RTOL, err))
    return results


def regenerate(names=None, directory=GOLDEN_DIR) -> list[Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for stem, table in generate(names).items():
        p = directory / f"{stem}.csv"
        p.write_text(to_csv_text(table), newline="")
        paths.append(p)
    return paths

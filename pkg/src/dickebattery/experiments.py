"""Scenario description, parameter sweeps and result tables."""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import metrics
from .dynamics import (
    DEFAULT_GRID,
    DEFAULT_T_END,
    ObservableSeries,
    PowerSummary,
    QuenchSchedule,
    charging_power,
    evolve,
    observables_along,
)
from .reservoir import ReservoirParams
from .spin import SystemGeometry
from .states import ChargerPrep, initial_state
from .steady import steady_state

METRIC_COLUMNS = ObservableSeries.COLUMNS
STEADY_COLUMNS = ("sweep_value",) + METRIC_COLUMNS
DYNAMICS_COLUMNS = ("t",) + METRIC_COLUMNS
POWER_COLUMNS = ("sweep_value", "P_W_max", "t_W_max", "P_E_max", "t_E_max")
SWEEP_AXES = ("none", "theta", "delta", "r", "n")

QUENCH_PROTOCOLS = ("continuous", "quench", "vacuum")


class SweepPointError(RuntimeError):
    """A numerical failure at one sweep point."""

    def __init__(self, axis: str, value: float, cause: BaseException):
        super().__init__(f"failed at {axis}={value!r}: {type(cause).__name__}: {cause}")
        self.axis = axis
        self.value = value
        self.cause = cause


@dataclass(frozen=True)
class Sweep:
    """Closed grid ``start..stop`` with ``count`` points (endpoints included)."""

    axis: str = "none"
    start: float = 0.0
    stop: float = 0.0
    count: int = 1

    def __post_init__(self):
        if self.axis not in SWEEP_AXES:
            raise ValueError(f"unknown sweep axis {self.axis!r}; choose from {', '.join(SWEEP_AXES)}")
        if not (math.isfinite(self.start) and math.isfinite(self.stop)):
            raise ValueError("sweep bounds must be finite")
        if int(self.count) != self.count or self.count < 1:
            raise ValueError(f"sweep count must be a positive integer, got {self.count}")
        if self.axis != "none" and self.count == 1 and self.start != self.stop:
            raise ValueError("a one-point sweep needs start == stop")
        if self.axis == "n":
            pts = self.values()
            if np.any(np.abs(pts - np.round(pts)) > 1e-9) or np.any(pts < 1):
                raise ValueError("size sweep points must be positive integers")

    def values(self) -> np.ndarray:
        if self.axis == "none":
            return np.zeros(1)
        return np.linspace(self.start, self.stop, int(self.count))


@dataclass(frozen=True)
class Scenario:
    """Everything needed to reproduce one experiment.

    ``delta`` overrides the phase pair: when it is set the charger phase is 0
    and the squeezing phase equals ``delta``.
    """

    n_c: int = 1
    n_b: int = 1
    theta: float = 0.0
    phi: float = 0.0
    r: float = 0.0
    varphi: float = 0.0
    delta: float | None = None
    gamma: float = 1.0
    t_q: float = math.inf
    t_end: float = DEFAULT_T_END
    grid: int = DEFAULT_GRID
    sweep: Sweep = field(default_factory=Sweep)

    def __post_init__(self):
        for name in ("theta", "phi", "varphi", "r", "gamma", "t_end"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.delta is not None and not math.isfinite(self.delta):
            raise ValueError("delta must be finite")
        if int(self.grid) != self.grid or self.grid < 3:
            raise ValueError("grid needs at least 3 points")
        if not self.t_end > 0:
            raise ValueError("t_end must be positive")
        # construct once so bad values surface as configuration errors
        SystemGeometry(self.n_c, self.n_b)
        self.prep()
        self.params()
        QuenchSchedule(self.r, self.t_q)

    def prep(self) -> ChargerPrep:
        phi = 0.0 if self.delta is not None else self.phi
        return ChargerPrep(self.theta, phi)

    def params(self) -> ReservoirParams:
        varphi = self.delta if self.delta is not None else self.varphi
        return ReservoirParams(r=self.r, varphi=varphi, gamma=self.gamma)

    def geometry(self) -> SystemGeometry:
        return SystemGeometry(self.n_c, self.n_b)

    def at(self, value: float) -> "Scenario":
        """Copy with the sweep axis set to ``value`` (sweep cleared)."""
        axis = self.sweep.axis
        base = replace(self, sweep=Sweep())
        if axis == "none":
            return base
        if axis == "n":
            n = int(round(value))
            return replace(base, n_c=n, n_b=n)
        return replace(base, **{axis: float(value)})


@dataclass(frozen=True)
class ResultRow:
    key: float  # sweep value or time
    E_B: float
    W_B: float
    W_B_P: float
    W_B_C: float
    C_B: float
    S_B: float

    def __post_init__(self):
        if not all(math.isfinite(v) for v in self.values()):
            raise ValueError(f"non-finite entry in result row at {self.key}")

    def values(self) -> tuple:
        return (self.key, self.E_B, self.W_B, self.W_B_P, self.W_B_C, self.C_B, self.S_B)


@dataclass(frozen=True, eq=False)
class ResultTable:
    """Column-named numeric table; ``meta`` carries scalars for sidecar output."""

    columns: tuple
    data: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        data = np.atleast_2d(np.asarray(self.data, dtype=float))
        if data.shape[1] != len(self.columns):
            raise ValueError(f"{data.shape[1]} data columns for {len(self.columns)} names")
        object.__setattr__(self, "data", data)

    def __len__(self):
        return self.data.shape[0]

    def column(self, name: str) -> np.ndarray:
        return self.data[:, self.columns.index(name)]

    @classmethod
    def from_rows(cls, columns, rows, meta=None) -> "ResultTable":
        return cls(tuple(columns), np.array([r.values() if isinstance(r, ResultRow) else r for r in rows]), meta or {})


def _steady_row(scenario: Scenario, value: float) -> ResultRow:
    geo = scenario.geometry()
    rho0 = initial_state(geo, scenario.prep())
    rep = metrics.report(steady_state(rho0, geo, scenario.params()), geo)
    return ResultRow(value, **rep.row())


def _guarded(fn, scenario: Scenario, value: float):
    try:
        return fn(scenario.at(value), value)
    except (ArithmeticError, RuntimeError, np.linalg.LinAlgError) as exc:
        raise SweepPointError(scenario.sweep.axis, float(value), exc) from exc


def _map_points(fn, scenario: Scenario, workers: int = 1):
    values = scenario.sweep.values()
    if workers <= 1 or len(values) == 1:
        return [_guarded(fn, scenario, v) for v in values]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_guarded, [fn] * len(values), [scenario] * len(values), values))


def run_steady_sweep(scenario: Scenario, workers: int = 1) -> ResultTable:
    """Steady-state battery metrics at every sweep point (one row each)."""
    rows = _map_points(_steady_row, scenario, workers)
    return ResultTable.from_rows(STEADY_COLUMNS, rows, {"sweep_axis": scenario.sweep.axis})


def _trajectory_series(scenario: Scenario, schedule: QuenchSchedule | None = None) -> ObservableSeries:
    geo = scenario.geometry()
    rho0 = initial_state(geo, scenario.prep())
    if schedule is None:
        schedule = QuenchSchedule(scenario.r, scenario.t_q)
    traj = evolve(rho0, geo, scenario.params(), schedule=schedule, t_end=scenario.t_end, output_grid=scenario.grid)
    return observables_along(traj)


def _series_table(series: ObservableSeries, power: PowerSummary) -> ResultTable:
    cols = [series.times] + [series.column(c) for c in METRIC_COLUMNS]
    return ResultTable(DYNAMICS_COLUMNS, np.column_stack(cols), power.as_dict())


def run_dynamics(scenario: Scenario) -> ResultTable:
    """Time series on the scenario grid; power maxima go to ``meta``."""
    try:
        series = _trajectory_series(scenario)
        return _series_table(series, charging_power(series))
    except (ArithmeticError, RuntimeError, np.linalg.LinAlgError) as exc:
        raise SweepPointError("t", 0.0, exc) from exc


def _power_row(scenario: Scenario, value: float) -> tuple:
    p = charging_power(_trajectory_series(scenario))
    return (float(value), p.P_W_max, p.t_W_max, p.P_E_max, p.t_E_max)


def power_scaling(scenario: Scenario, workers: int = 1) -> ResultTable:
    """Maximum charging powers (per battery spin) at every sweep point."""
    rows = _map_points(_power_row, scenario, workers)
    return ResultTable(POWER_COLUMNS, np.array(rows), {"sweep_axis": scenario.sweep.axis})


def quench_protocols(scenario: Scenario, t_q: float | None = None) -> dict[str, ResultTable]:
    """Continuous squeezing, a quench to vacuum at ``t_q`` and pure vacuum.

    ``t_q`` defaults to the scenario's quench time, or 0.5 when that is
    infinite.
    """
    if t_q is None:
        t_q = scenario.t_q if math.isfinite(scenario.t_q) else 0.5
    schedules = {
        "continuous": QuenchSchedule(scenario.r),
        "quench": QuenchSchedule(scenario.r, t_q),
        "vacuum": QuenchSchedule(scenario.r, 0.0),
    }
    out = {}
    for name, sched in schedules.items():
        try:
            series = _trajectory_series(scenario, sched)
        except (ArithmeticError, RuntimeError, np.linalg.LinAlgError) as exc:
            raise SweepPointError("protocol", name, exc) from exc
        table = _series_table(series, charging_power(series))
        table.meta.update(protocol=name, t_q=sched.t_q)
        out[name] = table
    return out

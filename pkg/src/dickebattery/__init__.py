"""Collective-spin quantum battery charged by a charger through a shared squeezed-vacuum reservoir."""
from .dynamics import (
    ObservableSeries,
    PowerSummary,
    QuenchSchedule,
    Trajectory,
    charging_power,
    evolve,
    evolve_to_steady,
    observables_along,
    sector_populations,
)
from .experiments import ResultRow, ResultTable, Scenario, Sweep, power_scaling, quench_protocols, run_dynamics, run_steady_sweep
from .metrics import BatteryHamiltonian, ErgotropyReport, ergotropy, ergotropy_split, l1_coherence, log_negativity, report
from .output import emit
from .reservoir import ReservoirParams, jump_operator, relative_phase, squeezing_params, system_jump
from .spin import DensityMatrix, SpinSector, SystemGeometry, clebsch_gordan, ladder_matrices, partial_trace_charger, to_coupled, to_product
from .states import ChargerPrep, initial_state, spin_coherent
from .steady import NullSpaceError, analytic_steady_state, steady_state, steady_state_weights

__version__ = "0.1.0"

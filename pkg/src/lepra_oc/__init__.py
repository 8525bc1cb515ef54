"""Optimal multidrug dosing for a within-host leprosy Type-1 reaction model.

An 11-compartment delayed ODE system (two-compartment PK, Schwann cells,
bacteria, six cytokines) is optimised over box-constrained dose schedules
with a forward-backward sweep.
"""

__version__ = "0.1.0"

from .controls import DRUGS, ControlSchedule, DoseWindow, Grid
from .integrate import IntegrationError, Trajectory, integrate_adjoint, integrate_forward, total_cost
from .model import (
    ADJOINT_NAMES,
    DEFAULT_X0,
    STATE_NAMES,
    StateVec,
    adjoint_rhs,
    cytokine_equilibrium,
    hamiltonian,
    heaviside,
    plasma_source,
    running_cost,
    state_rhs,
)
from .params import CostWeights, Params, get_preset, simulation_params, table_params
from .scenarios import ScenarioConfig, build_scenario, preset_names, run_comparison
from .solver import FbsmSettings, SolveReport, fbsm_solve
from .summary import CompartmentSummary, summarize

__all__ = [
    "DRUGS", "ControlSchedule", "DoseWindow", "Grid",
    "IntegrationError", "Trajectory", "integrate_adjoint", "integrate_forward", "total_cost",
    "ADJOINT_NAMES", "DEFAULT_X0", "STATE_NAMES", "StateVec", "adjoint_rhs", "cytokine_equilibrium",
    "hamiltonian", "heaviside", "plasma_source", "running_cost", "state_rhs",
    "CostWeights", "Params", "get_preset", "simulation_params", "table_params",
    "ScenarioConfig", "build_scenario", "preset_names", "run_comparison",
    "FbsmSettings", "SolveReport", "fbsm_solve",
    "CompartmentSummary", "summarize",
]

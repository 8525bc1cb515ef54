"""Forward-backward sweep with projected gradient steps and a golden-section line search."""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING, Callable, Sequence

import numpy as np

from .controls import ControlSchedule
from .integrate import (
    ADJOINT_FORMS,
    IntegrationError,
    Trajectory,
    integrate_adjoint,
    integrate_forward,
    total_cost,
    trapezoid,
)
from .params import CostWeights, Params
from .summary import CompartmentSummary, dosage_summary, summarize

if TYPE_CHECKING:
    from .scenarios import ScenarioConfig

__all__ = [
    "FbsmSettings",
    "LineSearchResult",
    "SolveReport",
    "control_gradient",
    "line_search_theta",
    "update_and_clamp",
    "check_convergence",
    "directional_derivative",
    "fbsm_solve",
]

log = logging.getLogger(__name__)

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class FbsmSettings:
    max_iters: int = 500
    tol_rel: float = 1e-3
    theta_max: float = 1.0
    ls_tol: float = 1e-5
    ls_max_evals: int = 60
    max_halvings: int = 10
    adjoint_form: str = "exact"

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if not self.tol_rel > 0:
            raise ValueError("tol_rel must be positive")
        if not self.theta_max > 0:
            raise ValueError("theta_max must be positive")
        if not self.ls_tol > 0:
            raise ValueError("ls_tol must be positive")
        if self.ls_max_evals < 3:
            raise ValueError("ls_max_evals must be >= 3")
        if self.adjoint_form not in ADJOINT_FORMS:
            raise ValueError(f"adjoint_form must be one of {ADJOINT_FORMS}")


def control_gradient(adjoint: Trajectory, controls: ControlSchedule, weights: CostWeights,
                     params: Params) -> list[np.ndarray]:
    """dH/dD for every window: 2 w D(s) + lambda1(s + shift) / V1.

    Nodes whose dose never reaches the plasma within the horizon do not
    affect the cost, so their gradient is 0.
    """
    grid = controls.grid
    if adjoint.grid != grid:
        raise ValueError("adjoint and controls are on different grids")
    lam1 = adjoint.states[:, 0]
    n = grid.n_nodes
    out = []
    for w in controls.windows:
        k = grid.lag_steps(w.shift)
        entering = np.zeros(n)
        if k < n:
            entering[: n - k] = lam1[k:]
        g = 2.0 * weights.for_drug(w.drug_index) * w.values + entering / params.V1
        out.append(np.where(w.support(grid), g, 0.0))
    return out


def directional_derivative(gradient: Sequence[np.ndarray], direction: Sequence[np.ndarray], h: float) -> float:
    """Trapezoid inner product of the control gradient with a perturbation."""
    return sum(trapezoid(np.asarray(g) * np.asarray(d), h) for g, d in zip(gradient, direction))


@dataclass(frozen=True)
class LineSearchResult:
    theta: float
    value: float
    value_at_zero: float
    evaluations: int
    capped: bool = False


def line_search_theta(controls: ControlSchedule, gradient: Sequence[np.ndarray],
                      evaluate: Callable[[float], float], settings: FbsmSettings) -> LineSearchResult:
    """Golden-section search for the step on [0, theta_max].

    The returned step is the best point evaluated, with theta = 0 always
    among the candidates, so ``value <= value_at_zero``.  ``capped`` is set
    when the evaluation budget ran out before the bracket reached ``ls_tol``.
    """
    f0 = evaluate(0.0)
    best_t, best_f = 0.0, f0
    evals = 1

    def consider(t, f):
        nonlocal best_t, best_f
        if f < best_f:
            best_t, best_f = t, f

    if all(not np.any(g) for g in gradient):
        return LineSearchResult(0.0, f0, f0, evals)

    a, b = 0.0, settings.theta_max
    x1 = b - INV_PHI * (b - a)
    x2 = a + INV_PHI * (b - a)
    f1, f2 = evaluate(x1), evaluate(x2)
    evals += 2
    consider(x1, f1)
    consider(x2, f2)
    while (b - a) > settings.ls_tol and evals < settings.ls_max_evals:
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - INV_PHI * (b - a)
            f1 = evaluate(x1)
            consider(x1, f1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + INV_PHI * (b - a)
            f2 = evaluate(x2)
            consider(x2, f2)
        evals += 1
    capped = (b - a) > settings.ls_tol
    if capped:
        log.warning("line search stopped after %d evaluations with bracket %.3g", evals, b - a)
    return LineSearchResult(best_t, best_f, f0, evals, capped)


def update_and_clamp(controls: ControlSchedule, gradient: Sequence[np.ndarray], theta: float) -> ControlSchedule:
    """Projected step D <- min(d_max, max(0, D - theta g)) on every node."""
    if len(gradient) != len(controls.windows):
        raise ValueError("one gradient array per window required")
    new = []
    for w, g in zip(controls.windows, gradient):
        g = np.asarray(g, dtype=float)
        if g.shape != w.values.shape:
            raise ValueError(f"{w.label}: gradient shape {g.shape} != {w.values.shape}")
        new.append(np.clip(w.values - theta * g, 0.0, w.d_max))
    return controls.with_values(new)


def check_convergence(prev: ControlSchedule, new: ControlSchedule, J_prev: float, J_next: float,
                      settings: FbsmSettings) -> tuple[bool, dict]:
    """Converged iff the max-norm relative control change and the relative cost change are both <= tol_rel.

    Control change is measured against max(1, max |D_prev|).
    """
    if len(prev.windows) != len(new.windows):
        raise ValueError("schedules differ in windows")
    change = 0.0
    scale = 1.0
    for a, b in zip(prev.windows, new.windows):
        if a.values.shape != b.values.shape:
            raise ValueError("schedules differ in shape")
        if a.values.size:
            change = max(change, float(np.max(np.abs(b.values - a.values))))
            scale = max(scale, float(np.max(np.abs(a.values))))
    control_rel = change / scale
    cost_change = abs(J_next - J_prev)
    cost_tol = settings.tol_rel * max(1.0, abs(J_prev))
    converged = control_rel <= settings.tol_rel and cost_change <= cost_tol
    return converged, {"control_rel_change": control_rel, "cost_change": cost_change, "cost_tol": cost_tol}


@dataclass
class SolveReport:
    converged: bool
    iterations: int
    cost_history: list[float]
    controls: ControlSchedule
    state_trajectory: Trajectory
    adjoint_trajectory: Trajectory
    dosage_summary: dict[str, float]
    compartment_summary: CompartmentSummary
    message: str = ""
    theta_history: list[float] = field(default_factory=list)
    scenario: str = ""

    def to_dict(self, include_trajectories: bool = True) -> dict:
        grid = self.controls.grid
        d = {
            "scenario": self.scenario,
            "converged": self.converged,
            "iterations": self.iterations,
            "message": self.message,
            "cost_history": [float(v) for v in self.cost_history],
            "theta_history": [float(v) for v in self.theta_history],
            "dosage_summary": dict(self.dosage_summary),
            "compartment_summary": self.compartment_summary.to_dict(),
            "grid": {"T": grid.T, "h": grid.h},
            "controls": {
                w.label: {"drug": w.drug, "window_id": w.window_id, "shift": w.shift,
                          "d_max": w.d_max, "values": w.values.tolist()}
                for w in self.controls.windows
            },
        }
        if include_trajectories:
            d["state_trajectory"] = _traj_dict(self.state_trajectory)
            d["adjoint_trajectory"] = _traj_dict(self.adjoint_trajectory)
        return d

    def to_json(self, path: str | Path, include_trajectories: bool = True) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(include_trajectories), fh, indent=2)
            fh.write("\n")

    def cost_history_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["iteration", "J"])
            for k, J in enumerate(self.cost_history):
                wr.writerow([k, repr(float(J))])


def _traj_dict(traj: Trajectory) -> dict:
    d = {"t": traj.times.tolist()}
    for j, name in enumerate(traj.names):
        d[name] = traj.states[:, j].tolist()
    return d


def fbsm_solve(scenario: "ScenarioConfig", settings: FbsmSettings | None = None) -> SolveReport:
    """Minimise the treatment cost over the scenario's admissible doses.

    Each iteration integrates the state forward, the co-state backward,
    forms the control gradient, picks a step by line search on the full
    cost of the projected update and accepts it only if the cost does not
    increase.  Raises :class:`IntegrationError` on non-finite values.
    """
    settings = settings or FbsmSettings()
    params = scenario.resolved_params()
    weights = scenario.weights
    x0 = scenario.x0_array()
    controls = scenario.initial_controls()

    def solve_forward(c):
        return integrate_forward(x0, c, params)

    fwd = solve_forward(controls)
    J = total_cost(fwd, controls, weights)
    history = [J]
    thetas: list[float] = []
    converged = False
    message = "iteration cap reached"
    iterations = 0

    while iterations < settings.max_iters:
        iterations += 1
        adj = integrate_adjoint(fwd, controls, params, form=settings.adjoint_form)
        if not controls.windows:
            converged, message = True, "no active controls"
            break
        grad = control_gradient(adj, controls, weights, params)

        def evaluate(theta, _c=controls, _g=grad):
            if theta == 0.0:
                return J
            trial = update_and_clamp(_c, _g, theta)
            try:
                return total_cost(solve_forward(trial), trial, weights)
            except IntegrationError:
                return math.inf

        ls = line_search_theta(controls, grad, evaluate, settings)
        theta, J_new = ls.theta, ls.value
        halvings = 0
        while J_new > J and halvings < settings.max_halvings:
            theta *= 0.5
            halvings += 1
            J_new = evaluate(theta)
        if J_new > J:
            message = "no descent after step halving"
            break
        new_controls = update_and_clamp(controls, grad, theta)
        done, diag = check_convergence(controls, new_controls, J, J_new, settings)
        controls = new_controls
        fwd = solve_forward(controls)
        J = total_cost(fwd, controls, weights)
        history.append(J)
        thetas.append(theta)
        log.debug("iter %d theta=%.6g J=%.10g %s", iterations, theta, J, diag)
        if done:
            converged, message = True, "converged"
            break

    if controls.windows:
        adj = integrate_adjoint(fwd, controls, params, form=settings.adjoint_form)

    return SolveReport(
        converged=converged,
        iterations=iterations,
        cost_history=history,
        controls=controls,
        state_trajectory=fwd,
        adjoint_trajectory=adj,
        dosage_summary=dosage_summary(controls),
        compartment_summary=summarize(fwd),
        message=message,
        theta_history=thetas,
        scenario=scenario.name,
    )

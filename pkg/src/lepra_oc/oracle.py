"""Independent checks: finite differences, closed-form PK and brute-force costs.

Nothing here touches the optimiser; only the model right-hand sides, the
forward integrator and the cost quadrature are used.
"""

from __future__ import annotations

import math
from typing import TYPE_CHECKING, Mapping

import numpy as np

from .controls import ControlSchedule, Grid
from .integrate import integrate_forward, total_cost
from .model import hamiltonian
from .params import CostWeights, Params

if TYPE_CHECKING:
    from .scenarios import ScenarioConfig

__all__ = [
    "fd_cost_gradient",
    "analytic_pk",
    "uncontrolled_cost",
    "fd_hamiltonian_gradient",
    "self_convergence",
]


def _direction_arrays(controls: ControlSchedule, direction) -> list[np.ndarray]:
    if isinstance(direction, Mapping):
        unknown = set(direction) - set(controls.labels)
        if unknown:
            raise KeyError(f"unknown window(s) in direction: {sorted(unknown)}")
        coefs = [float(direction.get(lbl, 0.0)) for lbl in controls.labels]
    else:
        coefs = [float(c) for c in direction]
        if len(coefs) != len(controls.windows):
            raise ValueError("one direction coefficient per window required")
    return [c * np.ones(controls.grid.n_nodes) for c in coefs]


def fd_cost_gradient(scenario: "ScenarioConfig", direction, eps: float | None = None,
                     controls: ControlSchedule | None = None) -> float:
    """Central-difference directional derivative of the cost.

    ``direction`` gives one constant perturbation per window, as a mapping
    ``label -> coefficient`` or a sequence in window order.  The perturbed
    schedules must stay inside the box.  ``eps`` defaults to
    ``1e-3 * max(1, |D|)`` over the perturbed windows.
    """
    params = scenario.resolved_params()
    controls = controls or scenario.initial_controls()
    dirs = _direction_arrays(controls, direction)
    if not any(np.any(d) for d in dirs):
        return 0.0
    if eps is None:
        scale = max([1.0] + [float(np.max(np.abs(w.values))) for w, d in zip(controls.windows, dirs) if np.any(d)])
        eps = 1e-3 * scale
    if not eps > 0:
        raise ValueError("eps must be positive")
    x0 = scenario.x0_array()
    base = controls.arrays()

    def J(sign):
        c = controls.with_values([b + sign * eps * d for b, d in zip(base, dirs)])
        return total_cost(integrate_forward(x0, c, params), c, scenario.weights)

    val = (J(+1) - J(-1)) / (2.0 * eps)
    if not math.isfinite(val):
        raise FloatingPointError("non-finite cost in finite difference")
    return val


def analytic_pk(u: float, params: Params, t: float) -> tuple[float, float]:
    """Closed-form (c1, c2) from zero initial concentrations under a constant source ``u`` (mg/day)."""
    a = params.k12 + params.k1
    k2 = params.k2
    b = params.k12 * params.V1 / params.V2
    if math.isclose(a, k2, rel_tol=1e-12):
        raise ValueError("k12 + k1 equals k2; closed form needs distinct rates")
    if a == 0:
        raise ValueError("k12 + k1 must be positive")
    C = u / (params.V1 * a)
    c1 = C * (1.0 - math.exp(-a * t))
    c2 = b * C * ((1.0 - math.exp(-k2 * t)) / k2 - (math.exp(-a * t) - math.exp(-k2 * t)) / (k2 - a))
    return c1, c2


def uncontrolled_cost(scenario: "ScenarioConfig") -> float:
    """Cost of the scenario's forward run with every dose set to zero."""
    controls = ControlSchedule.zeros_like(scenario.initial_controls())
    traj = integrate_forward(scenario.x0_array(), controls, scenario.resolved_params())
    return total_cost(traj, controls, scenario.weights)


def fd_hamiltonian_gradient(t: float, x, lam, controls: ControlSchedule, weights: CostWeights,
                            params: Params, rel_step: float = 1e-6) -> np.ndarray:
    """Central differences of the Hamiltonian in each state component.

    Lagged c1 values are tied to the perturbed c1, matching the co-state
    equations' treatment of the delays.
    """
    x = np.asarray(x, dtype=float)
    grad = np.empty(11)
    for j in range(11):
        step = rel_step * max(1.0, abs(x[j]))
        xp, xm = x.copy(), x.copy()
        xp[j] += step
        xm[j] -= step
        grad[j] = (hamiltonian(t, xp, lam, controls, weights, params)
                   - hamiltonian(t, xm, lam, controls, weights, params)) / (2.0 * step)
    return grad


def self_convergence(x0, controls_factory, params: Params, T: float, steps=(0.1, 0.05), h_ref: float = 0.001):
    """Max-norm errors against a fine-step reference on the nodes shared by every grid.

    ``controls_factory(grid)`` builds the schedule for a grid.  Returns the
    errors for each step in ``steps``.
    """
    ref_grid = Grid(T, h_ref)
    ref = integrate_forward(x0, controls_factory(ref_grid), params).states
    errors = []
    for h in steps:
        g = Grid(T, h)
        sol = integrate_forward(x0, controls_factory(g), params).states
        stride = round(h / h_ref)
        errors.append(float(np.max(np.abs(sol - ref[::stride]))))
    return errors

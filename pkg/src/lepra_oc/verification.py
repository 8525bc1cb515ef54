"""Oracle suite run by ``lepra-oc verify``: solver internals against independent checks."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .controls import ControlSchedule, Grid
from .integrate import integrate_adjoint, integrate_forward
from .model import DEFAULT_X0, adjoint_rhs, toxicity_lags
from .oracle import analytic_pk, fd_cost_gradient, fd_hamiltonian_gradient, self_convergence
from .params import CostWeights, simulation_params, table_params
from .scenarios import ScenarioConfig, build_scenario
from .solver import control_gradient, directional_derivative

__all__ = ["CheckResult", "short_horizon_scenario", "gradient_agreement", "run_verification"]


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.name}: {self.detail}"


def short_horizon_scenario(two_dose: bool, T: float = 5.0, h: float = 0.1,
                           tau: float = 2.0, tau_d: float = 1.0) -> ScenarioConfig:
    """MDT on a short horizon; delays shortened so every term is active inside [0, T]."""
    base = build_scenario("mdt-60-delay" if two_dose else "mdt-30", h=h)
    return base.replace(name=f"gradcheck-{'two' if two_dose else 'single'}", grid=Grid(T, h),
                        param_overrides=(("tau", tau), ("tau_d", tau_d)))


def gradient_agreement(sc: ScenarioConfig, adjoint_form: str = "exact") -> dict[str, tuple[float, float]]:
    """Adjoint and finite-difference directional derivatives, one constant direction per window."""
    params = sc.resolved_params()
    controls = sc.initial_controls()
    fwd = integrate_forward(sc.x0_array(), controls, params)
    adj = integrate_adjoint(fwd, controls, params, form=adjoint_form)
    grad = control_gradient(adj, controls, sc.weights, params)
    out = {}
    n = controls.grid.n_nodes
    for i, w in enumerate(controls.windows):
        dirs = [np.zeros(n) for _ in controls.windows]
        dirs[i] = np.ones(n)
        ad = directional_derivative(grad, dirs, controls.grid.h)
        fd = fd_cost_gradient(sc, {w.label: 1.0})
        out[w.label] = (ad, fd)
    return out


def run_verification() -> list[CheckResult]:
    results = []

    for two in (False, True):
        for sc in (short_horizon_scenario(two), short_horizon_scenario(two, tau=5.0, tau_d=30.0)):
            worst = 0.0
            for ad, fd in gradient_agreement(sc).values():
                worst = max(worst, abs(ad - fd) / abs(fd))
            p = sc.resolved_params()
            results.append(CheckResult(
                f"adjoint gradient vs FD ({'two' if two else 'single'}-dose, tau={p.tau:g}, tau_d={p.tau_d:g})",
                worst <= 1e-3, f"max rel err {worst:.2e} (tol 1e-3)"))

    p = table_params()
    grid = Grid(30.0, 0.001)
    u = 130.0
    ctrl = ControlSchedule.constant(grid, {("rifampin", 1): u}, {("rifampin", 1): 1000.0})
    traj = integrate_forward(np.zeros(11), ctrl, p)
    worst = 0.0
    for t in (1.0, 5.0, 30.0):
        c1, c2 = analytic_pk(u, p, t)
        x = traj.at(t)
        worst = max(worst, abs(x[0] - c1) / c1, abs(x[1] - c2) / c2)
    results.append(CheckResult("PK closed form vs RK4 (h=1e-3)", worst <= 1e-8, f"max rel err {worst:.2e} (tol 1e-8)"))

    sim = simulation_params()

    def no_drug(g):
        return ControlSchedule(g)

    e1, e2 = self_convergence(DEFAULT_X0.as_array(), no_drug, sim, T=5.0)
    order = math.log2(e1 / e2)
    results.append(CheckResult("RK4 convergence order", order >= 3.8, f"order {order:.3f} (min 3.8)"))

    rng = np.random.default_rng(7)
    ctrl5 = short_horizon_scenario(True).initial_controls()
    x = DEFAULT_X0.as_array() + rng.uniform(0.1, 1.0, 11)
    lam = rng.normal(size=11)
    fd = fd_hamiltonian_gradient(2.0, x, lam, ctrl5, CostWeights(), sim.replace(tau=2.0, tau_d=1.0))
    n = len(toxicity_lags(sim, True))
    an = adjoint_rhs(2.0, lam, x, [x[0]] * n, ctrl5, sim.replace(tau=2.0, tau_d=1.0))
    rel = float(np.max(np.abs(an + fd) / np.maximum(np.abs(fd), 1e-12 + np.abs(an))))
    results.append(CheckResult("co-state RHS == -dH/dx (central FD)", rel <= 1e-5, f"max rel err {rel:.2e} (tol 1e-5)"))

    sc = build_scenario("mdt-30")
    c = sc.initial_controls()
    adj = integrate_adjoint(integrate_forward(sc.x0_array(), c, sc.resolved_params()), c, sc.resolved_params())
    results.append(CheckResult("transversality lambda(T) == 0", bool(np.all(adj.states[-1] == 0.0)),
                               "exact zeros at t=T"))
    return results

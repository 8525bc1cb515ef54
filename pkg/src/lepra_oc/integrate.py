"""Fixed-step RK4 integration of the state (forward) and co-state (backward) systems."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .controls import ControlSchedule, Grid
from .model import ADJOINT_NAMES, STATE_NAMES, adjoint_deriv, state_deriv, toxicity_lags
from .params import CostWeights, Params

__all__ = [
    "IntegrationError",
    "Trajectory",
    "integrate_forward",
    "integrate_adjoint",
    "total_cost",
    "trapezoid",
    "ADJOINT_FORMS",
]

ADJOINT_FORMS = ("instantaneous", "exact")


class IntegrationError(FloatingPointError):
    """Non-finite value met during integration; ``step`` is the offending step index."""

    def __init__(self, message: str, step: int):
        super().__init__(message)
        self.step = step


@dataclass(frozen=True)
class Trajectory:
    """Node values of a state or co-state solution, shape ``(n_nodes, 11)``."""

    grid: Grid
    states: np.ndarray
    names: tuple[str, ...] = STATE_NAMES

    def __post_init__(self):
        arr = np.asarray(self.states, dtype=float)
        if arr.shape != (self.grid.n_nodes, len(self.names)):
            raise ValueError(f"trajectory shape {arr.shape} does not match grid ({self.grid.n_nodes} nodes)")
        arr.setflags(write=False)
        object.__setattr__(self, "states", arr)

    @property
    def times(self) -> np.ndarray:
        return self.grid.times

    def column(self, name: str) -> np.ndarray:
        return self.states[:, self.names.index(name)]

    def at(self, t: float) -> np.ndarray:
        """Exact node value; ``t`` must be a grid time."""
        n = self.grid.lag_steps(t)
        if not 0 <= n < self.grid.n_nodes:
            raise ValueError(f"t={t} outside [0, {self.grid.T}]")
        return self.states[n].copy()

    def interp(self, t: float) -> np.ndarray:
        """Linear interpolation between neighbouring nodes."""
        if not 0 <= t <= self.grid.T + 1e-12:
            raise ValueError(f"t={t} outside [0, {self.grid.T}]")
        s = t / self.grid.h
        n = min(int(np.floor(s)), self.grid.n_nodes - 2)
        a = s - n
        return (1 - a) * self.states[n] + a * self.states[n + 1]

    def to_csv(self, path: str | Path) -> None:
        header = ",".join(("t",) + tuple(self.names))
        data = np.column_stack([self.times, self.states])
        np.savetxt(path, data, delimiter=",", header=header, comments="", fmt="%.17g")

    @classmethod
    def from_csv(cls, path: str | Path, grid: Grid) -> "Trajectory":
        with open(path) as fh:
            names = tuple(fh.readline().strip().split(",")[1:])
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        return cls(grid, data[:, 1:], names)


def _lag_steps(controls: ControlSchedule, params: Params) -> list[int]:
    g = controls.grid
    return [g.lag_steps(lag) for lag in toxicity_lags(params, controls.two_dose)]


def integrate_forward(x0, controls: ControlSchedule, params: Params, grid: Grid | None = None) -> Trajectory:
    """Classic RK4 from ``x0`` over the control grid.

    Lagged c1 values come from stored nodes (half-step stages use the
    mean of the two neighbouring nodes) and are 0 before t = 0.  A zero lag
    uses the stage's own c1.
    """
    grid = grid or controls.grid
    if grid != controls.grid:
        raise ValueError("controls are defined on a different grid")
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (11,) or not np.all(np.isfinite(x0)):
        raise ValueError("initial state must be 11 finite values")
    h = grid.h
    N = grid.n_steps
    lags = _lag_steps(controls, params)
    src_node, src_mid = controls.source_rates(params)

    X = np.empty((N + 1, 11))
    X[0] = x0
    c1 = X[:, 0]

    def hist(i):
        return c1[i] if i >= 0 else 0.0

    with np.errstate(over="ignore", invalid="ignore"):
        for n in range(N):
            x = X[n]
            # summed lagged c1 at t_n, t_n + h/2, t_n + h; zero lags handled per stage
            l0 = lm = l1 = 0.0
            tied = 0
            for m in lags:
                if m == 0:
                    tied += 1
                    continue
                l0 += hist(n - m)
                lm += 0.5 * (hist(n - m) + hist(n - m + 1))
                l1 += hist(n + 1 - m)
            xa = x
            k1 = state_deriv(xa, src_node[n], l0 + tied * xa[0], params)
            xb = x + 0.5 * h * k1
            k2 = state_deriv(xb, src_mid[n], lm + tied * xb[0], params)
            xc = x + 0.5 * h * k2
            k3 = state_deriv(xc, src_mid[n], lm + tied * xc[0], params)
            xd = x + h * k3
            k4 = state_deriv(xd, src_node[n + 1], l1 + tied * xd[0], params)
            X[n + 1] = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            if not np.all(np.isfinite(X[n + 1])):
                raise IntegrationError(f"non-finite state at step {n + 1} (t={(n + 1) * h:g})", n + 1)
    return Trajectory(grid, X, STATE_NAMES)


def integrate_adjoint(forward: Trajectory, controls: ControlSchedule, params: Params,
                      grid: Grid | None = None, form: str = "exact") -> Trajectory:
    """Backward RK4 sweep of the co-state system from lambda(T) = 0.

    ``form="instantaneous"`` treats every toxicity delay as instantaneous
    in the lambda1 equation.  ``form="exact"``
    samples the lambda1 toxicity term at the advanced times t + lag (zero
    beyond the horizon), which is the true adjoint of the delayed system.
    The two coincide when every lag is zero.
    """
    if form not in ADJOINT_FORMS:
        raise ValueError(f"unknown adjoint form {form!r}; choose from {ADJOINT_FORMS}")
    grid = grid or controls.grid
    if forward.grid != grid or controls.grid != grid:
        raise ValueError("forward trajectory, controls and grid must share one grid")
    h = grid.h
    N = grid.n_steps
    lags = _lag_steps(controls, params)
    n_lags = len(lags)
    X = forward.states
    c1 = X[:, 0]
    S = X[:, 2]
    mu_d = params.mu_d

    def hist(i):
        return c1[i] if i >= 0 else 0.0

    L = np.zeros((N + 1, 11))
    l3 = L[:, 2]

    def adv(i):
        # mu_d * S * lambda3 at node i, zero beyond the horizon
        return mu_d * S[i] * l3[i] if i <= N else 0.0

    def adv_mid(i):
        # midpoint between nodes i and i + 1
        if i + 1 > N:
            return 0.0
        return mu_d * 0.5 * (S[i] + S[i + 1]) * 0.5 * (l3[i] + l3[i + 1])

    with np.errstate(over="ignore", invalid="ignore"):
        for n in range(N - 1, -1, -1):
            x1, x0 = X[n + 1], X[n]
            xm = 0.5 * (x0 + x1)
            L0 = Lm = L1 = 0.0
            for m in lags:
                if m == 0:
                    L0 += X[n, 0]
                    Lm += xm[0]
                    L1 += X[n + 1, 0]
                    continue
                L0 += hist(n - m)
                Lm += 0.5 * (hist(n - m) + hist(n - m + 1))
                L1 += hist(n + 1 - m)
            if form == "exact":
                nz = sum(1 for m in lags if m == 0)
                a1 = sum(adv(n + 1 + m) for m in lags if m > 0)
                am = sum(adv_mid(n + m) for m in lags if m > 0)
                a0 = sum(adv(n + m) for m in lags if m > 0)

                def tox(lam, x, a):
                    return a + nz * mu_d * x[2] * lam[2]
            else:
                a1 = am = a0 = None

                def tox(lam, x, a):
                    return None

            lam = L[n + 1]
            k1 = adjoint_deriv(lam, x1, L1, n_lags, params, tox(lam, x1, a1))
            lb = lam - 0.5 * h * k1
            k2 = adjoint_deriv(lb, xm, Lm, n_lags, params, tox(lb, xm, am))
            lc = lam - 0.5 * h * k2
            k3 = adjoint_deriv(lc, xm, Lm, n_lags, params, tox(lc, xm, am))
            ld = lam - h * k3
            k4 = adjoint_deriv(ld, x0, L0, n_lags, params, tox(ld, x0, a0))
            L[n] = lam - (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            if not np.all(np.isfinite(L[n])):
                raise IntegrationError(f"non-finite adjoint at step {n} (t={n * h:g})", n)
    L[N] = 0.0
    return Trajectory(grid, L, ADJOINT_NAMES)


def trapezoid(values: np.ndarray, h: float) -> float:
    """Composite trapezoid rule on a uniform grid."""
    v = np.asarray(values, dtype=float)
    if v.size < 2:
        return 0.0
    return float(h * (v.sum() - 0.5 * (v[0] + v[-1])))


def total_cost(forward: Trajectory, controls: ControlSchedule, weights: CostWeights) -> float:
    """Trapezoid quadrature of the running cost over [0, T]."""
    if forward.grid != controls.grid:
        raise ValueError("trajectory and controls must share one grid")
    integrand = forward.column("I") + forward.column("B") + controls.penalty_rates(weights)
    return trapezoid(integrand, forward.grid.h)

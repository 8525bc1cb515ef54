"""State and co-state right-hand sides, running cost and Hamiltonian.

State order is (c1, c2, S, I, B, Ig, Ta, I10, I12, I15, I17); co-states
lambda1..lambda11 follow the same order.  All functions work on plain
length-11 arrays; :class:`StateVec` is a convenience wrapper.
"""

from __future__ import annotations

import math
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .controls import ControlSchedule
from .params import CostWeights, Params

__all__ = [
    "STATE_NAMES",
    "ADJOINT_NAMES",
    "StateVec",
    "heaviside",
    "plasma_source",
    "toxicity_lags",
    "state_rhs",
    "state_deriv",
    "running_cost",
    "adjoint_rhs",
    "adjoint_deriv",
    "hamiltonian",
    "cytokine_equilibrium",
    "DEFAULT_X0",
]

STATE_NAMES = ("c1", "c2", "S", "I", "B", "Ig", "Ta", "I10", "I12", "I15", "I17")
ADJOINT_NAMES = tuple(f"lambda{j}" for j in range(1, 12))


class StateVec(NamedTuple):
    c1: float = 0.0
    c2: float = 0.0
    S: float = 0.0
    I: float = 0.0
    B: float = 0.0
    Ig: float = 0.0
    Ta: float = 0.0
    I10: float = 0.0
    I12: float = 0.0
    I15: float = 0.0
    I17: float = 0.0

    def as_array(self) -> np.ndarray:
        return np.array(self, dtype=float)

    @classmethod
    def from_array(cls, x) -> "StateVec":
        return cls(*(float(v) for v in x))


DEFAULT_X0 = StateVec(0.0, 0.0, 520.0, 250.0, 2500.0, 50.0, 50.0, 75.0, 125.0, 125.0, 100.0)


def heaviside(v: float) -> int:
    """Unit step with H(0) = 1."""
    return 1 if v >= 0 else 0


def _check_finite(arr, what):
    arr = np.asarray(arr, dtype=float)
    if arr.shape != (11,):
        raise ValueError(f"{what} must have 11 components, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{what} contains non-finite values")
    return arr


def plasma_source(t: float, controls: ControlSchedule, params: Params) -> float:
    """Total dose rate entering the plasma at ``t``, divided by V1."""
    return sum(w.value_at(t, controls.grid) for w in controls.windows) / params.V1


def toxicity_lags(params: Params, two_dose: bool) -> tuple[float, ...]:
    """Lags at which c1 drives susceptible-cell toxicity."""
    if two_dose:
        return (params.tau_d, params.tau + params.tau_d)
    return (params.tau_d,)


def state_deriv(x, source: float, c1_lagged: float, p: Params) -> np.ndarray:
    """Right-hand side with the plasma source and summed lagged c1 precomputed."""
    c1, c2, S, I, B, Ig, Ta, I10, I12, I15, I17 = x
    gate = c2 - p.C_min
    kill = gate if gate >= 0 else 0.0
    kd = p.k_d
    return np.array([
        source - (p.k12 + p.k1) * c1,
        p.k12 * p.V1 / p.V2 * c1 - p.k2 * c2,
        p.omega - p.beta * S * B - p.gamma * S - p.mu1 * S - p.mu_d * c1_lagged * S,
        p.beta * S * B - p.delta * I - p.mu1 * I - p.eta * kd * kill * I,
        p.alpha * I - p.y * B - p.mu2 * B - kd * kill * B,
        p.alpha_Ig * I
        - (p.d_Ta_Ig * Ta + p.d_I12_Ig * I12 + p.d_I15_Ig * I15 + p.d_I17_Ig * I17) * I
        - p.mu_Ig * (Ig - p.Q_Ig),
        p.beta_Ta * Ig * I - p.mu_Ta * (Ta - p.Q_Ta),
        p.alpha_I10 * I - p.d_Ig_I10 * Ig - p.mu_I10 * (I10 - p.Q_I10),
        p.beta_I12 * Ig * I - p.mu_I12 * (I12 - p.Q_I12),
        p.beta_I15 * Ig * I - p.mu_I15 * (I15 - p.Q_I15),
        p.beta_I17 * Ig * I - p.mu_I17 * (I17 - p.Q_I17),
    ])


def state_rhs(t: float, x, controls: ControlSchedule, c1_history: Callable[[float], float],
              params: Params) -> np.ndarray:
    """Time derivative of the 11 compartments at ``t``.

    ``c1_history(lag)`` must return c1(t - lag), and 0 when t - lag < 0.
    """
    x = _check_finite(x, "state")
    lagged = sum(c1_history(lag) for lag in toxicity_lags(params, controls.two_dose))
    return state_deriv(x, plasma_source(t, controls, params), lagged, params)


def running_cost(x, doses, weights: CostWeights) -> float:
    """I + B + weighted squared doses.

    ``doses`` holds per-drug dose rates (rifampin, dapsone, clofazimine),
    either one triple or one triple per dosing window.
    """
    d = np.atleast_2d(np.asarray(doses, dtype=float))
    if d.shape[-1] != 3:
        raise ValueError("doses must be given per drug (3 columns)")
    w = np.array([weights.P, weights.Q, weights.R])
    return float(x[3] + x[4] + np.sum(w * d**2))


def adjoint_deriv(lam, x, c1_lagged: float, n_lags: int, p: Params,
                  tox_lambda1: float | None = None) -> np.ndarray:
    """Co-state right-hand side, d(lambda)/dt = -dH/dx.

    ``c1_lagged`` is the summed lagged plasma concentration entering the
    S equation.  The c1 toxicity term in lambda1 defaults to
    ``n_lags * mu_d * S * lambda3`` (delays treated as instantaneous);
    pass ``tox_lambda1`` to replace it, e.g. with advanced-time samples.
    """
    l1, l2, l3, l4, l5, l6, l7, l8, l9, l10, l11 = lam
    c1, c2, S, I, B, Ig, Ta, I10, I12, I15, I17 = x
    gate = c2 - p.C_min
    on = 1.0 if gate >= 0 else 0.0
    kill = gate * on
    kd = p.k_d
    if tox_lambda1 is None:
        tox_lambda1 = n_lags * p.mu_d * S * l3
    inhib = p.d_Ta_Ig * Ta + p.d_I12_Ig * I12 + p.d_I15_Ig * I15 + p.d_I17_Ig * I17
    return np.array([
        (p.k12 + p.k1) * l1 - p.k12 * p.V1 / p.V2 * l2 + tox_lambda1,
        p.k2 * l2 + p.eta * kd * on * I * l4 + kd * on * B * l5,
        (p.beta * B + p.mu1 + p.gamma + p.mu_d * c1_lagged) * l3 - p.beta * B * l4,
        (p.delta + p.mu1 + p.eta * kd * kill) * l4 - p.alpha * l5 - p.alpha_Ig * l6 + inhib * l6
        - p.beta_Ta * Ig * l7 - p.alpha_I10 * l8 - p.beta_I12 * Ig * l9
        - p.beta_I15 * Ig * l10 - p.beta_I17 * Ig * l11 - 1.0,
        p.beta * S * l3 - p.beta * S * l4 + (p.y + p.mu2 + kd * kill) * l5 - 1.0,
        p.mu_Ig * l6 - p.beta_Ta * I * l7 + p.d_Ig_I10 * l8 - p.beta_I12 * I * l9
        - p.beta_I15 * I * l10 - p.beta_I17 * I * l11,
        p.d_Ta_Ig * I * l6 + p.mu_Ta * l7,
        p.mu_I10 * l8,
        p.d_I12_Ig * I * l6 + p.mu_I12 * l9,
        p.d_I15_Ig * I * l6 + p.mu_I15 * l10,
        p.d_I17_Ig * I * l6 + p.mu_I17 * l11,
    ])


def adjoint_rhs(t: float, lam, x, c1_delayed: Sequence[float], controls: ControlSchedule,
                params: Params, tox_lambda1: float | None = None) -> np.ndarray:
    """Co-state derivative at ``t``.

    ``c1_delayed`` lists c1 at each toxicity lag (one value in single-dosage
    mode, two in two-dosage mode), read from the stored forward trajectory.
    """
    lam = _check_finite(lam, "adjoint")
    x = _check_finite(x, "state")
    c1_delayed = list(c1_delayed)
    n = len(toxicity_lags(params, controls.two_dose))
    if len(c1_delayed) != n:
        raise ValueError(f"expected {n} delayed c1 value(s), got {len(c1_delayed)}")
    if not all(math.isfinite(v) for v in c1_delayed):
        raise ValueError("delayed c1 values must be finite")
    return adjoint_deriv(lam, x, sum(c1_delayed), n, params, tox_lambda1)


def hamiltonian(t: float, x, lam, controls: ControlSchedule, weights: CostWeights,
                params: Params, c1_delayed: Sequence[float] | None = None) -> float:
    """Running cost plus co-state weighted dynamics.

    Without ``c1_delayed`` every lagged c1 is identified with the current
    c1, which is the linearisation the co-state equations are written for.
    """
    x = np.asarray(x, dtype=float)
    lags = toxicity_lags(params, controls.two_dose)
    if c1_delayed is None:
        c1_delayed = [x[0]] * len(lags)
    f = state_deriv(x, plasma_source(t, controls, params), sum(c1_delayed), params)
    doses = _per_drug_doses(t, controls)
    return running_cost(x, doses, weights) + float(np.dot(np.asarray(lam, dtype=float), f))


def _per_drug_doses(t: float, controls: ControlSchedule) -> np.ndarray:
    rows = []
    for w in controls.windows:
        row = [0.0, 0.0, 0.0]
        row[w.drug_index] = w.value_at(t, controls.grid)
        rows.append(row)
    return np.array(rows).reshape(-1, 3)


def cytokine_equilibrium(params: Params) -> dict[str, float]:
    """Cytokine fixed point of the uninfected system (I = 0)."""
    p = params
    for name in ("mu_Ig", "mu_Ta", "mu_I10", "mu_I12", "mu_I15", "mu_I17"):
        if getattr(p, name) <= 0:
            raise ValueError(f"decay rate {name} must be positive")
    return {
        "Ig": p.Q_Ig,
        "Ta": p.Q_Ta,
        "I10": p.Q_I10 - p.d_Ig_I10 * p.Q_Ig / p.mu_I10,
        "I12": p.Q_I12,
        "I15": p.Q_I15,
        "I17": p.Q_I17,
    }

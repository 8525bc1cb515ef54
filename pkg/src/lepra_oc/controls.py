"""Time grid and per-node dose schedules."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["DRUGS", "Grid", "DoseWindow", "ControlSchedule", "grid_steps"]

DRUGS = ("rifampin", "dapsone", "clofazimine")


def grid_steps(length: float, h: float, what: str = "length") -> int:
    """Number of steps of size ``h`` in ``length``; raises unless it is an exact integer."""
    n = round(length / h)
    if abs(n * h - length) > 1e-9 * max(1.0, abs(length)):
        raise ValueError(f"{what} {length} is not an integer multiple of the step h={h}")
    return int(n)


@dataclass(frozen=True)
class Grid:
    """Uniform grid on [0, T] with step ``h``."""

    T: float = 30.0
    h: float = 0.1

    def __post_init__(self):
        if not (self.h > 0 and self.T > 0):
            raise ValueError("grid needs h > 0 and T > 0")
        grid_steps(self.T, self.h, "horizon T")

    @property
    def t0(self) -> float:
        return 0.0

    @property
    def n_steps(self) -> int:
        return grid_steps(self.T, self.h, "horizon T")

    @property
    def n_nodes(self) -> int:
        return self.n_steps + 1

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n_nodes) * self.h

    def lag_steps(self, lag: float) -> int:
        return grid_steps(lag, self.h, "delay")


@dataclass(frozen=True)
class DoseWindow:
    """One drug's dose-rate function (mg/day) sampled on the grid nodes.

    The window's dose sampled at node time ``s`` enters the plasma at time
    ``s + shift``.  ``values`` is stored read-only.
    """

    drug: str
    window_id: int
    values: np.ndarray
    d_max: float
    shift: float = 0.0

    def __post_init__(self):
        if self.drug not in DRUGS:
            raise ValueError(f"unknown drug {self.drug!r}")
        if self.window_id not in (1, 2):
            raise ValueError("window_id must be 1 or 2")
        if self.d_max <= 0:
            raise ValueError("d_max must be positive")
        vals = np.array(self.values, dtype=float)
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        if not np.all(np.isfinite(vals)):
            raise ValueError("dose values must be finite")
        if np.any(vals < 0) or np.any(vals > self.d_max):
            raise ValueError(f"{self.label} doses must lie in [0, {self.d_max}]")

    @property
    def drug_index(self) -> int:
        return DRUGS.index(self.drug)

    @property
    def label(self) -> str:
        return f"{self.drug}.{self.window_id}"

    def with_values(self, values) -> "DoseWindow":
        return DoseWindow(self.drug, self.window_id, values, self.d_max, self.shift)

    def support(self, grid: Grid) -> np.ndarray:
        """Boolean mask of nodes whose dose enters the plasma within the horizon."""
        k = grid.lag_steps(self.shift)
        mask = np.zeros(grid.n_nodes, dtype=bool)
        mask[: max(grid.n_nodes - k, 0)] = True
        return mask

    def entering(self, grid: Grid) -> tuple[np.ndarray, np.ndarray]:
        """Dose entering the plasma at the grid nodes and at the step midpoints."""
        k = grid.lag_steps(self.shift)
        n = grid.n_nodes
        at_nodes = np.zeros(n)
        at_mid = np.zeros(n - 1)
        if k < n:
            at_nodes[k:] = self.values[: n - k]
            mids = 0.5 * (self.values[:-1] + self.values[1:])
            at_mid[k:] = mids[: n - 1 - k]
        return at_nodes, at_mid

    def value_at(self, t: float, grid: Grid) -> float:
        """Dose entering the plasma at time ``t`` (0 before the window opens)."""
        s = t - self.shift
        if s < 0:
            return 0.0
        return float(np.interp(s, grid.times, self.values))


@dataclass(frozen=True)
class ControlSchedule:
    """All dosing windows of one scenario on a shared grid.

    ``two_dose`` selects the delayed two-dosage state system, whose
    susceptible-cell equation carries a second toxicity term lagged by
    ``tau + tau_d``.
    """

    grid: Grid
    windows: tuple[DoseWindow, ...] = field(default_factory=tuple)
    two_dose: bool = False

    def __post_init__(self):
        object.__setattr__(self, "windows", tuple(self.windows))
        labels = [w.label for w in self.windows]
        if len(set(labels)) != len(labels):
            raise ValueError("duplicate dosing windows")
        for w in self.windows:
            if len(w.values) != self.grid.n_nodes:
                raise ValueError(f"{w.label}: values length {len(w.values)} != node count {self.grid.n_nodes}")
            self.grid.lag_steps(w.shift)

    @classmethod
    def constant(cls, grid: Grid, doses: dict, d_max: dict, shifts: dict | None = None,
                 two_dose: bool = False) -> "ControlSchedule":
        """Build constant windows; keys of ``doses`` are ``(drug, window_id)``."""
        shifts = shifts or {}
        windows = [
            DoseWindow(drug, wid, np.full(grid.n_nodes, float(v)), float(d_max[(drug, wid)]),
                       float(shifts.get((drug, wid), 0.0)))
            for (drug, wid), v in doses.items()
        ]
        return cls(grid, tuple(windows), two_dose)

    @classmethod
    def zeros_like(cls, other: "ControlSchedule") -> "ControlSchedule":
        return other.with_values([np.zeros_like(w.values) for w in other.windows])

    def with_values(self, arrays) -> "ControlSchedule":
        arrays = list(arrays)
        if len(arrays) != len(self.windows):
            raise ValueError("one array per window required")
        return ControlSchedule(self.grid, tuple(w.with_values(a) for w, a in zip(self.windows, arrays)),
                               self.two_dose)

    def arrays(self) -> list[np.ndarray]:
        return [np.array(w.values) for w in self.windows]

    @property
    def labels(self) -> list[str]:
        return [w.label for w in self.windows]

    def source_rates(self, params) -> tuple[np.ndarray, np.ndarray]:
        """Plasma source (mg/(L day)) at nodes and step midpoints."""
        n = self.grid.n_nodes
        nodes, mids = np.zeros(n), np.zeros(n - 1)
        for w in self.windows:
            a, b = w.entering(self.grid)
            nodes += a
            mids += b
        return nodes / params.V1, mids / params.V1

    def penalty_rates(self, weights) -> np.ndarray:
        """Sum of weighted squared entering doses at each node."""
        out = np.zeros(self.grid.n_nodes)
        for w in self.windows:
            a, _ = w.entering(self.grid)
            out += weights.for_drug(w.drug_index) * a**2
        return out

    def doses_at(self, t: float) -> list[tuple[int, float]]:
        """``(drug_index, dose)`` for each window at time ``t`` after shifting."""
        return [(w.drug_index, w.value_at(t, self.grid)) for w in self.windows]

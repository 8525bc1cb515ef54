"""Time averages and final-day values of trajectories and dose schedules."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .controls import ControlSchedule
from .integrate import Trajectory, trapezoid

__all__ = ["CompartmentSummary", "summarize", "dosage_summary"]


@dataclass(frozen=True)
class CompartmentSummary:
    """Per-compartment trapezoid time average and value at t = T."""

    mean: dict[str, float]
    final: dict[str, float]

    def to_dict(self) -> dict[str, dict[str, float]]:
        return {name: {"mean": self.mean[name], "final": self.final[name]} for name in self.mean}

    @classmethod
    def from_dict(cls, d) -> "CompartmentSummary":
        return cls({k: float(v["mean"]) for k, v in d.items()}, {k: float(v["final"]) for k, v in d.items()})


def summarize(traj: Trajectory) -> CompartmentSummary:
    if traj.grid.n_nodes < 1:
        raise ValueError("empty trajectory")
    T = traj.grid.T
    mean, final = {}, {}
    for j, name in enumerate(traj.names):
        col = traj.states[:, j]
        mean[name] = trapezoid(col, traj.grid.h) / T
        final[name] = float(col[-1])
    return CompartmentSummary(mean, final)


def dosage_summary(controls: ControlSchedule) -> dict[str, float]:
    """Time-averaged dose rate of each window over the nodes that reach the plasma."""
    out = {}
    h = controls.grid.h
    for w in controls.windows:
        vals = w.values[w.support(controls.grid)]
        if vals.size == 0:
            out[w.label] = 0.0
        elif vals.size == 1:
            out[w.label] = float(vals[0])
        else:
            out[w.label] = trapezoid(vals, h) / (h * (vals.size - 1))
    return out

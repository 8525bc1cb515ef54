"""Model parameters, named presets and flat key-value config IO."""

from __future__ import annotations

import configparser
import dataclasses
import math
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Mapping

__all__ = [
    "Params",
    "CostWeights",
    "table_params",
    "simulation_params",
    "get_preset",
    "PRESET_NAMES",
    "params_to_config",
    "params_from_config",
    "save_params",
    "load_params",
]


@dataclass(frozen=True)
class Params:
    """Rate constants, volumes, thresholds and delays of the 11-compartment model.

    Units follow the parameter table: volumes in L, rates in 1/day,
    concentrations in mg/L, delays in days.  Defaults are the table values.
    """

    # pharmacokinetics
    V1: float = 25.0
    V2: float = 20.0
    k12: float = 0.4
    k1: float = 1.6
    k2: float = 0.8
    # drug toxicity and kill rates (rifampin, dapsone, clofazimine)
    mu_d1: float = 1.0
    mu_d2: float = 3.81
    mu_d3: float = 7.1
    k_d1: float = 0.26
    k_d2: float = 0.99
    k_d3: float = 1.85
    eta: float = 0.01
    C_min: float = 0.0
    tau_d: float = 30.0
    tau: float = 30.0
    # Schwann cells and bacteria
    omega: float = 0.0220
    beta: float = 3.4400
    gamma: float = 0.1795
    mu1: float = 0.0018
    delta: float = 0.2681
    alpha: float = 0.0630
    y: float = 0.0003
    mu2: float = 0.5700
    # cytokine production
    alpha_Ig: float = 0.0003
    beta_Ta: float = 0.0040
    alpha_I10: float = 0.0440
    beta_I12: float = 0.0110
    beta_I15: float = 0.0250
    beta_I17: float = 0.0290
    # cytokine inhibition
    d_Ta_Ig: float = 0.005540
    d_I12_Ig: float = 0.009030
    d_I15_Ig: float = 0.006250
    d_I17_Ig: float = 0.004990
    d_Ig_I10: float = 0.001460
    # cytokine decay
    mu_Ig: float = 2.1600
    mu_Ta: float = 1.1120
    mu_I10: float = 16.000
    mu_I12: float = 1.8800
    mu_I15: float = 2.1600
    mu_I17: float = 2.3400
    # pre-infection baselines
    Q_Ig: float = 0.1000
    Q_Ta: float = 0.1400
    Q_I10: float = 0.1500
    Q_I12: float = 1.1100
    Q_I15: float = 0.2000
    Q_I17: float = 0.3170

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not isinstance(v, (int, float)) or not math.isfinite(v):
                raise ValueError(f"parameter {f.name} must be a finite number, got {v!r}")
            if v < 0:
                raise ValueError(f"parameter {f.name} must be non-negative, got {v}")
        if self.V1 <= 0 or self.V2 <= 0:
            raise ValueError("compartment volumes V1 and V2 must be positive")
        for name in DECAY_RATES:
            if getattr(self, name) <= 0:
                raise ValueError(f"decay rate {name} must be positive")

    @property
    def mu_d(self) -> float:
        """Summed delayed toxicity of the three drugs."""
        return self.mu_d1 + self.mu_d2 + self.mu_d3

    @property
    def k_d(self) -> float:
        """Summed kill rate of the three drugs."""
        return self.k_d1 + self.k_d2 + self.k_d3

    def replace(self, **changes) -> "Params":
        unknown = set(changes) - FIELD_NAMES
        if unknown:
            raise KeyError(f"unknown parameter(s): {', '.join(sorted(unknown))}")
        return dataclasses.replace(self, **{k: float(v) for k, v in changes.items()})

    def to_dict(self) -> dict[str, float]:
        return {f.name: float(getattr(self, f.name)) for f in fields(self)}

    @classmethod
    def from_mapping(cls, mapping: Mapping[str, float]) -> "Params":
        unknown = set(mapping) - FIELD_NAMES
        if unknown:
            raise KeyError(f"unknown parameter(s): {', '.join(sorted(unknown))}")
        return cls(**{k: float(v) for k, v in mapping.items()})


FIELD_NAMES = frozenset(f.name for f in fields(Params))
DECAY_RATES = ("mu_Ig", "mu_Ta", "mu_I10", "mu_I12", "mu_I15", "mu_I17")


@dataclass(frozen=True)
class CostWeights:
    """Quadratic penalty weights on rifampin, dapsone and clofazimine doses."""

    P: float = 1.5
    Q: float = 1.5
    R: float = 1.5

    def __post_init__(self):
        for name in ("P", "Q", "R"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"cost weight {name} must be positive, got {v}")

    def for_drug(self, drug_index: int) -> float:
        return (self.P, self.Q, self.R)[drug_index]


# values quoted in the numerical-study text, overriding the table for the runs
SIMULATION_OVERRIDES = {
    "V1": 1200.0,
    "V2": 500.0,
    "omega": 20.90,
    "beta": 0.000030,
    "mu1": 0.00018,
    "gamma": 0.01795,
    "alpha": 0.2,
    "y": 0.03,
    "alpha_I10": 0.5282,
}


def table_params() -> Params:
    return Params()


def simulation_params() -> Params:
    return Params().replace(**SIMULATION_OVERRIDES)


_PRESETS = {"table": table_params, "simulation": simulation_params}
PRESET_NAMES = tuple(_PRESETS)


def get_preset(name: str, overrides: Mapping[str, float] | None = None) -> Params:
    """Return the named parameter preset with optional per-key overrides."""
    try:
        p = _PRESETS[name]()
    except KeyError:
        raise KeyError(f"unknown parameter preset {name!r}; choose from {PRESET_NAMES}") from None
    if overrides:
        p = p.replace(**overrides)
    return p


def params_to_config(params: Params, section: str = "params") -> configparser.ConfigParser:
    cfg = configparser.ConfigParser()
    cfg.optionxform = str  # keep key case
    cfg[section] = {k: repr(v) for k, v in params.to_dict().items()}
    return cfg


def params_from_config(cfg: configparser.ConfigParser, section: str = "params",
                       base: Params | None = None) -> Params:
    """Read parameters from ``section``; keys missing there keep the ``base`` values."""
    base = base or Params()
    if not cfg.has_section(section):
        return base
    values = {k: float(v) for k, v in cfg[section].items()}
    return base.replace(**values)


def save_params(params: Params, path: str | Path) -> None:
    with open(path, "w") as fh:
        params_to_config(params).write(fh)


def load_params(path: str | Path, base: Params | None = None) -> Params:
    cfg = configparser.ConfigParser()
    cfg.optionxform = str
    if not cfg.read(path):
        raise FileNotFoundError(f"cannot read parameter file {path}")
    return params_from_config(cfg, base=base)

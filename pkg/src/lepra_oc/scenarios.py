"""Named experiment presets, scenario config files and side-by-side comparisons."""

from __future__ import annotations

import configparser
import dataclasses
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .controls import DRUGS, ControlSchedule, Grid
from .integrate import IntegrationError, integrate_forward
from .model import DEFAULT_X0, STATE_NAMES, StateVec
from .params import PRESET_NAMES, CostWeights, Params, get_preset
from .solver import FbsmSettings, SolveReport, fbsm_solve
from .summary import CompartmentSummary, summarize

__all__ = [
    "MODES",
    "ScenarioConfig",
    "PRESETS",
    "preset_names",
    "build_scenario",
    "scenario_to_config",
    "scenario_from_config",
    "save_scenario",
    "load_scenario",
    "resolve_scenario",
    "ComparisonReport",
    "run_comparison",
    "EXPECTED_TRENDS",
    "trend_violations",
    "PUBLISHED_NO_DRUG_MEAN",
    "PUBLISHED_NO_DRUG_FINAL",
    "baseline_report",
]

SINGLE, TWO = "single-window-30d", "two-window-60d-delay"
MODES = (SINGLE, TWO)

SHORT = {"rif": "rifampin", "dap": "dapsone", "clo": "clofazimine"}

# initial dose rates in mg/day
SINGLE_WINDOW_DOSES = {"rifampin": 20.0, "dapsone": 100.0, "clofazimine": 10.0}
FIRST_WINDOW_DOSES = {"rifampin": 10.0, "dapsone": 50.0, "clofazimine": 5.0}
# adult monthly rows as mg/day, widened x3 into a loose box
D_MAX = {"rifampin": 3 * 600 / 30, "dapsone": 3 * 100.0, "clofazimine": 3 * 300 / 30}

# published no-drug reference values, average and day-30, compartments S..I17
PUBLISHED_NO_DRUG_MEAN = {
    "S": 519.999587, "I": 249.999579, "B": 2499.978250, "Ig": 49.988312, "Ta": 49.999918,
    "I10": 74.984018, "I12": 124.998569, "I15": 125.000643, "I17": 100.001938,
}
PUBLISHED_NO_DRUG_FINAL = {
    "S": 519.999202, "I": 249.999186, "B": 2499.957950, "Ig": 49.977404, "Ta": 49.999842,
    "I10": 74.969104, "I12": 124.997232, "I15": 125.001243, "I17": 100.003745,
}

# sign of (drugged - no drug) reported for every drugged regimen
EXPECTED_TRENDS = {
    "S": -1, "I": -1, "B": -1, "Ig": -1, "Ta": -1, "I10": -1, "I12": -1, "I15": +1, "I17": +1,
}


@dataclass(frozen=True)
class ScenarioConfig:
    """Everything needed to reproduce one run.

    ``initial_doses`` and ``d_max`` are keyed by ``(drug, window_id)``.  In the
    two-window mode, window 1 is active from day 0 and window 2 enters the
    plasma ``tau`` days later.
    """

    name: str
    drugs: tuple[str, ...]
    mode: str = SINGLE
    params_preset: str = "simulation"
    param_overrides: tuple[tuple[str, float], ...] = ()
    x0: StateVec = DEFAULT_X0
    grid: Grid = field(default_factory=Grid)
    initial_doses: dict = field(default_factory=dict)
    d_max: dict = field(default_factory=dict)
    weights: CostWeights = field(default_factory=CostWeights)

    def __post_init__(self):
        object.__setattr__(self, "drugs", tuple(self.drugs))
        object.__setattr__(self, "param_overrides", tuple((str(k), float(v)) for k, v in self.param_overrides))
        object.__setattr__(self, "x0", StateVec(*self.x0))
        for d in self.drugs:
            if d not in DRUGS:
                raise ValueError(f"unknown drug {d!r}")
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}; choose from {MODES}")
        if self.params_preset not in PRESET_NAMES:
            raise ValueError(f"unknown parameter preset {self.params_preset!r}")
        if not self.drugs and not self.name.startswith("no-drug"):
            raise ValueError("a scenario without drugs must be named no-drug*")
        expected = set(self.window_keys())
        if set(self.initial_doses) != expected or set(self.d_max) != expected:
            raise ValueError(f"initial_doses and d_max must cover exactly {sorted(expected)}")
        if self.mode == TWO and self.grid.T < self.resolved_params().tau:
            raise ValueError("two-window mode needs T >= tau")

    @property
    def two_dose(self) -> bool:
        return self.mode == TWO

    def window_keys(self) -> list[tuple[str, int]]:
        ids = (1, 2) if self.two_dose else (1,)
        return [(d, i) for d in self.drugs for i in ids]

    def resolved_params(self) -> Params:
        return get_preset(self.params_preset, dict(self.param_overrides))

    def x0_array(self) -> np.ndarray:
        return self.x0.as_array()

    def initial_controls(self) -> ControlSchedule:
        tau = self.resolved_params().tau
        shifts = {k: (tau if k[1] == 2 else 0.0) for k in self.window_keys()}
        doses = {k: self.initial_doses[k] for k in self.window_keys()}
        return ControlSchedule.constant(self.grid, doses, self.d_max, shifts, self.two_dose)

    def replace(self, **changes) -> "ScenarioConfig":
        return dataclasses.replace(self, **changes)

    def without_drugs(self) -> "ScenarioConfig":
        base = "no-drug-60-delay" if self.two_dose else "no-drug-30"
        return self.replace(name=base, drugs=(), initial_doses={}, d_max={})


def _preset_table() -> dict[str, tuple[str, ...]]:
    combos = {
        "no-drug": (),
        "rif": ("rifampin",),
        "dap": ("dapsone",),
        "clo": ("clofazimine",),
        "rif+dap": ("rifampin", "dapsone"),
        "dap+clo": ("dapsone", "clofazimine"),
        "rif+clo": ("rifampin", "clofazimine"),
        "mdt": DRUGS,
    }
    out = {}
    for suffix in ("-30", "-60-delay"):
        for key, drugs in combos.items():
            out[key + suffix] = drugs
    return out


PRESETS = _preset_table()


def preset_names() -> list[str]:
    return list(PRESETS)


def build_scenario(name: str, params_preset: str = "simulation", h: float = 0.1) -> ScenarioConfig:
    """Fully populated config for a registered preset name."""
    try:
        drugs = PRESETS[name]
    except KeyError:
        raise KeyError(f"unknown scenario preset {name!r}") from None
    two = name.endswith("-60-delay")
    doses, bounds = {}, {}
    for d in drugs:
        if two:
            doses[(d, 1)] = FIRST_WINDOW_DOSES[d]
            doses[(d, 2)] = SINGLE_WINDOW_DOSES[d]
            bounds[(d, 1)] = bounds[(d, 2)] = D_MAX[d]
        else:
            doses[(d, 1)] = SINGLE_WINDOW_DOSES[d]
            bounds[(d, 1)] = D_MAX[d]
    return ScenarioConfig(
        name=name,
        drugs=drugs,
        mode=TWO if two else SINGLE,
        params_preset=params_preset,
        grid=Grid(60.0 if two else 30.0, h),
        initial_doses=doses,
        d_max=bounds,
        weights=CostWeights(1.5, 1.5, 1.5),
    )


# ---------------------------------------------------------------- config files

def scenario_to_config(sc: ScenarioConfig) -> configparser.ConfigParser:
    cfg = configparser.ConfigParser()
    cfg.optionxform = str
    s = {
        "name": sc.name,
        "drugs": ",".join(sc.drugs),
        "mode": sc.mode,
        "params_preset": sc.params_preset,
        "T": repr(sc.grid.T),
        "h": repr(sc.grid.h),
    }
    for k, v in zip(STATE_NAMES, sc.x0):
        s[f"x0.{k}"] = repr(float(v))
    cfg["scenario"] = s
    cfg["params"] = {k: repr(v) for k, v in sc.param_overrides}
    cfg["weights"] = {"P": repr(sc.weights.P), "Q": repr(sc.weights.Q), "R": repr(sc.weights.R)}
    doses = {}
    for (drug, wid) in sc.window_keys():
        doses[f"{drug}.{wid}"] = repr(float(sc.initial_doses[(drug, wid)]))
        doses[f"{drug}.{wid}.d_max"] = repr(float(sc.d_max[(drug, wid)]))
    cfg["doses"] = doses
    return cfg


def scenario_from_config(cfg: configparser.ConfigParser) -> ScenarioConfig:
    if not cfg.has_section("scenario"):
        raise ValueError("scenario config needs a [scenario] section")
    s = cfg["scenario"]
    base = build_scenario(s["name"]) if s.get("name") in PRESETS else None
    drugs_raw = s.get("drugs", ",".join(base.drugs) if base else "")
    drugs = tuple(SHORT.get(d.strip(), d.strip()) for d in drugs_raw.split(",") if d.strip())
    mode = s.get("mode", base.mode if base else SINGLE)
    grid_default = base.grid if base else Grid(60.0 if mode == TWO else 30.0)
    grid = Grid(float(s.get("T", grid_default.T)), float(s.get("h", grid_default.h)))
    x0 = StateVec(*(float(s.get(f"x0.{k}", v)) for k, v in zip(STATE_NAMES, (base.x0 if base else DEFAULT_X0))))
    overrides = tuple((k, float(v)) for k, v in cfg["params"].items()) if cfg.has_section("params") else ()
    w = cfg["weights"] if cfg.has_section("weights") else {}
    bw = base.weights if base else CostWeights()
    weights = CostWeights(float(w.get("P", bw.P)), float(w.get("Q", bw.Q)), float(w.get("R", bw.R)))
    ids = (1, 2) if mode == TWO else (1,)
    dsec = cfg["doses"] if cfg.has_section("doses") else {}
    doses, bounds = {}, {}
    for d in drugs:
        for i in ids:
            key = f"{d}.{i}"
            default = (FIRST_WINDOW_DOSES if (mode == TWO and i == 1) else SINGLE_WINDOW_DOSES)[d]
            doses[(d, i)] = float(dsec.get(key, default))
            bounds[(d, i)] = float(dsec.get(f"{key}.d_max", D_MAX[d]))
    return ScenarioConfig(
        name=s.get("name", "custom"),
        drugs=drugs,
        mode=mode,
        params_preset=s.get("params_preset", "simulation"),
        param_overrides=overrides,
        x0=x0,
        grid=grid,
        initial_doses=doses,
        d_max=bounds,
        weights=weights,
    )


def save_scenario(sc: ScenarioConfig, path: str | Path) -> None:
    with open(path, "w") as fh:
        scenario_to_config(sc).write(fh)


def load_scenario(path: str | Path) -> ScenarioConfig:
    cfg = configparser.ConfigParser()
    cfg.optionxform = str
    try:
        if not cfg.read(path):
            raise FileNotFoundError(f"cannot read scenario file {path}")
    except configparser.Error as exc:
        raise ValueError(f"malformed scenario file {path}: {exc}") from exc
    return scenario_from_config(cfg)


def resolve_scenario(name_or_path: str) -> ScenarioConfig:
    """Preset name or path to a scenario file."""
    if name_or_path in PRESETS:
        return build_scenario(name_or_path)
    if Path(name_or_path).is_file():
        return load_scenario(name_or_path)
    raise KeyError(f"unknown scenario preset {name_or_path!r} (and no such file)")


# ----------------------------------------------------------------- comparisons

def trend_violations(drugged: CompartmentSummary, baseline: CompartmentSummary) -> list[str]:
    """Compartments whose final value moves against the expected direction."""
    bad = []
    for name, sign in EXPECTED_TRENDS.items():
        diff = drugged.final[name] - baseline.final[name]
        if sign < 0 and diff > 0 or sign > 0 and diff < 0:
            bad.append(name)
    return bad


@dataclass
class ComparisonReport:
    baseline: str
    reports: dict[str, SolveReport]
    summaries: dict[str, CompartmentSummary]
    change_sign: dict[str, dict[str, int]]

    def table(self, which: str = "final") -> str:
        names = list(self.summaries)
        rows = ["compartment," + ",".join(names)]
        for comp in STATE_NAMES:
            vals = [getattr(self.summaries[n], which)[comp] for n in names]
            rows.append(comp + "," + ",".join(f"{v:.9g}" for v in vals))
        return "\n".join(rows)

    def to_dict(self) -> dict:
        return {
            "baseline": self.baseline,
            "summaries": {k: v.to_dict() for k, v in self.summaries.items()},
            "change_sign": self.change_sign,
            "dosage_summary": {k: r.dosage_summary for k, r in self.reports.items()},
            "converged": {k: r.converged for k, r in self.reports.items()},
        }


def run_comparison(scenarios: list[ScenarioConfig], settings: FbsmSettings | None = None,
                   workers: int = 1) -> ComparisonReport:
    """Solve each scenario and compare final values with the no-drug baseline.

    The baseline is the first drug-free member, or the drug-free version of
    the first scenario when none is given.
    """
    if not scenarios:
        raise ValueError("no scenarios to compare")
    first = scenarios[0]
    for sc in scenarios[1:]:
        if sc.grid != first.grid or sc.x0 != first.x0:
            raise ValueError("scenarios must share grid and initial state")
    settings = settings or FbsmSettings()
    members = list(scenarios)
    base = next((sc for sc in members if not sc.drugs), None)
    if base is None:
        base = first.without_drugs()
        members = [base] + members
    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            solved = list(ex.map(lambda sc: fbsm_solve(sc, settings), members))
    else:
        solved = [fbsm_solve(sc, settings) for sc in members]
    reports, summaries = {}, {}
    for sc, rep in zip(members, solved):
        key = sc.name
        k = 2
        while key in reports:
            key = f"{sc.name}#{k}"
            k += 1
        reports[key] = rep
        summaries[key] = rep.compartment_summary
    base_key = next(k for k, sc in zip(reports, members) if sc is base)
    b = summaries[base_key]
    signs = {
        k: {c: int(np.sign(s.final[c] - b.final[c])) for c in STATE_NAMES}
        for k, s in summaries.items()
    }
    return ComparisonReport(base_key, reports, summaries, signs)


def baseline_report(h: float = 0.1) -> dict:
    """No-drug 30-day summary under both parameter presets against the published no-drug reference values.

    Relative deviations are documented, not asserted: neither preset
    reproduces the published near-constant baseline.
    """
    out = {}
    for preset in PRESET_NAMES:
        sc = build_scenario("no-drug-30", params_preset=preset, h=h)
        entry: dict = {"params_preset": preset}
        try:
            traj = integrate_forward(sc.x0_array(), sc.initial_controls(), sc.resolved_params())
        except IntegrationError as exc:
            entry["error"] = str(exc)
            entry["mean_rel_dev"] = {k: None for k in PUBLISHED_NO_DRUG_MEAN}
            entry["final_rel_dev"] = {k: None for k in PUBLISHED_NO_DRUG_FINAL}
            out[preset] = entry
            continue
        s = summarize(traj)
        entry["mean"] = {k: s.mean[k] for k in PUBLISHED_NO_DRUG_MEAN}
        entry["final"] = {k: s.final[k] for k in PUBLISHED_NO_DRUG_FINAL}
        entry["mean_rel_dev"] = {k: (s.mean[k] - v) / v for k, v in PUBLISHED_NO_DRUG_MEAN.items()}
        entry["final_rel_dev"] = {k: (s.final[k] - v) / v for k, v in PUBLISHED_NO_DRUG_FINAL.items()}
        out[preset] = entry
    return out

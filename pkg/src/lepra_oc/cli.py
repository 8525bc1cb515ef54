"""Command-line entry point: ``lepra-oc {simulate,optimize,compare,verify,presets}``."""

from __future__ import annotations

import argparse
import configparser
import dataclasses
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .controls import Grid
from .integrate import IntegrationError, integrate_forward, total_cost
from .scenarios import (
    ScenarioConfig,
    baseline_report,
    preset_names,
    resolve_scenario,
    run_comparison,
    scenario_to_config,
)
from .solver import FbsmSettings, fbsm_solve
from .summary import dosage_summary, summarize
from .verification import run_verification

log = logging.getLogger("lepra_oc")


class UsageError(Exception):
    pass


def _parse_set(items):
    out = {}
    for item in items or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise UsageError(f"--set expects key=value, got {item!r}")
        try:
            out[key.strip()] = float(value)
        except ValueError:
            raise UsageError(f"--set {key}: {value!r} is not a number") from None
    return out


_SOLVER_KEYS = {"max_iters": int, "tol_rel": float, "theta_max": float, "ls_tol": float,
                "ls_max_evals": int, "max_halvings": int, "adjoint_form": str}
_RUN_KEYS = {"out": str, "quiet": lambda v: v.strip().lower() in ("1", "true", "yes", "on")}


def _read_file_sections(path: str) -> dict:
    """[solver] and [run] sections of a scenario file, typed."""
    cfg = configparser.ConfigParser()
    cfg.optionxform = str
    cfg.read(path)
    out = {}
    for section, conv in (("solver", _SOLVER_KEYS), ("run", _RUN_KEYS)):
        if not cfg.has_section(section):
            out[section] = {}
            continue
        items = cfg[section]
        unknown = set(items) - set(conv)
        if unknown:
            raise UsageError(f"unknown [{section}] key(s): {', '.join(sorted(unknown))}")
        try:
            out[section] = {k: conv[k](v) for k, v in items.items()}
        except ValueError as exc:
            raise UsageError(f"bad value in [{section}]: {exc}") from None
    return out


def _resolve(args, name: str) -> tuple[ScenarioConfig, dict]:
    try:
        sc = resolve_scenario(name)
    except KeyError as exc:
        raise UsageError(exc.args[0]) from None
    except (ValueError, configparser.Error, FileNotFoundError) as exc:
        raise UsageError(f"unreadable scenario config {name!r}: {exc}") from None
    extra = _read_file_sections(name) if Path(name).is_file() else {"solver": {}, "run": {}}
    if args.out is None:
        args.out = extra["run"].get("out", "out")
    args.quiet = args.quiet or extra["run"].get("quiet", False)
    changes = {}
    if args.params_preset:
        changes["params_preset"] = args.params_preset
    overrides = dict(sc.param_overrides)
    overrides.update(_parse_set(args.set))
    changes["param_overrides"] = tuple(overrides.items())
    T = args.horizon if args.horizon is not None else sc.grid.T
    h = args.step if args.step is not None else sc.grid.h
    try:
        changes["grid"] = Grid(T, h)
        sc = sc.replace(**changes)
        sc.resolved_params()
    except (ValueError, KeyError) as exc:
        raise UsageError(str(exc).strip("'\"")) from None
    return sc, extra["solver"]


def _settings(args, solver_cfg: dict) -> FbsmSettings:
    kw = dict(solver_cfg)
    for flag, key in (("max_iters", "max_iters"), ("tol", "tol_rel"), ("theta_max", "theta_max"),
                      ("adjoint_form", "adjoint_form")):
        v = getattr(args, flag, None)
        if v is not None:
            kw[key] = v
    try:
        return FbsmSettings(**kw)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _scenario_dict(sc: ScenarioConfig) -> dict:
    cfg = scenario_to_config(sc)
    return {s: dict(cfg[s]) for s in cfg.sections()}


def _write_json(path: Path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, allow_nan=False)
        fh.write("\n")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, float) and not np.isfinite(obj):
        return None
    return obj


def cmd_presets(args) -> int:
    for name in preset_names():
        print(name)
    return 0


def cmd_simulate(args) -> int:
    sc, _ = _resolve(args, args.scenario)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    controls = sc.initial_controls()
    params = sc.resolved_params()
    traj = integrate_forward(sc.x0_array(), controls, params)
    traj.to_csv(out / "trajectory.csv")
    report = {
        "scenario": sc.name,
        "cost": total_cost(traj, controls, sc.weights),
        "dosage_summary": dosage_summary(controls),
        "compartment_summary": summarize(traj).to_dict(),
    }
    _write_json(out / "report.json", report)
    if not args.quiet:
        print(f"{sc.name}: J = {report['cost']:.10g}")
    return _finish(args, out, sc, None, ["trajectory.csv", "report.json"])


def cmd_optimize(args) -> int:
    sc, solver_cfg = _resolve(args, args.scenario)
    settings = _settings(args, solver_cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rep = fbsm_solve(sc, settings)
    rep.state_trajectory.to_csv(out / "trajectory.csv")
    rep.adjoint_trajectory.to_csv(out / "adjoint.csv")
    rep.to_json(out / "report.json")
    rep.cost_history_csv(out / "cost_history.csv")
    if not args.quiet:
        print(f"{sc.name}: converged={rep.converged} iterations={rep.iterations} J={rep.cost_history[-1]:.10g}")
        for label, v in rep.dosage_summary.items():
            print(f"  {label:<16} {v:.6g} mg/day")
    status = _finish(args, out, sc, settings,
                     ["trajectory.csv", "adjoint.csv", "report.json", "cost_history.csv"],
                     extra={"converged": rep.converged, "message": rep.message})
    if not rep.converged:
        print(f"error: solve did not converge ({rep.message})", file=sys.stderr)
        return 1
    return status


def cmd_compare(args) -> int:
    members = [_resolve(args, name) for name in args.scenario]
    scenarios = [m[0] for m in members]
    settings = _settings(args, members[0][1])
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        comp = run_comparison(scenarios, settings, workers=args.workers)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    _write_json(out / "comparison.json", _jsonable(comp.to_dict()))
    for which in ("mean", "final"):
        (out / f"summary_{which}.csv").write_text(comp.table(which) + "\n")
    if not args.quiet:
        print(comp.table("final"))
    extra = {"baseline_vs_published": _jsonable(baseline_report(h=scenarios[0].grid.h))}
    return _finish(args, out, scenarios[0], settings,
                   ["comparison.json", "summary_mean.csv", "summary_final.csv"], extra=extra,
                   scenarios=scenarios)


def cmd_verify(args) -> int:
    results = run_verification()
    for r in results:
        print(r.line())
    return 0 if all(r.passed for r in results) else 1


def _finish(args, out: Path, sc, settings, files, extra=None, scenarios=None) -> int:
    manifest = {
        "tool": "lepra-oc",
        "version": __version__,
        "subcommand": args.command,
        "argv": list(args.argv),
        "scenario": _scenario_dict(sc),
        "settings": dataclasses.asdict(settings) if settings else None,
        "outputs": [str(out / f) for f in files] + [str(out / "manifest.json")],
        "wall_clock_seconds": time.perf_counter() - args.t_start,
    }
    if scenarios:
        manifest["scenarios"] = [_scenario_dict(s) for s in scenarios]
    if extra:
        manifest.update(extra)
    _write_json(out / "manifest.json", manifest)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lepra-oc", description=__doc__)
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, many=False):
        if many:
            p.add_argument("--scenario", action="append", required=True,
                           help="preset name or scenario file (repeatable)")
        else:
            p.add_argument("--scenario", required=True, help="preset name or scenario file")
        p.add_argument("--params-preset", choices=("table", "simulation"))
        p.add_argument("--set", action="append", metavar="KEY=VALUE", help="parameter override (repeatable)")
        p.add_argument("--step", type=float, help="RK4 step h (days)")
        p.add_argument("--horizon", type=float, help="horizon T (days)")
        p.add_argument("--out", help="output directory (default ./out)")
        p.add_argument("--quiet", action="store_true")

    def solver_flags(p):
        p.add_argument("--max-iters", type=int)
        p.add_argument("--tol", type=float)
        p.add_argument("--theta-max", type=float)
        p.add_argument("--adjoint-form", choices=("exact", "instantaneous"))

    p = sub.add_parser("simulate", help="forward run with the initial doses")
    common(p)
    p.set_defaults(func=cmd_simulate)
    p = sub.add_parser("optimize", help="forward-backward sweep optimisation")
    common(p)
    solver_flags(p)
    p.set_defaults(func=cmd_optimize)
    p = sub.add_parser("compare", help="optimise several scenarios against the no-drug baseline")
    common(p, many=True)
    solver_flags(p)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_compare)
    p = sub.add_parser("verify", help="run the oracle suite")
    p.set_defaults(func=cmd_verify)
    p = sub.add_parser("presets", help="list scenario presets")
    p.set_defaults(func=cmd_presets)
    return ap


def run_cli(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    args.argv = argv
    args.t_start = time.perf_counter()
    logging.basicConfig(level=logging.WARNING if getattr(args, "quiet", False) else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (IntegrationError, FloatingPointError) as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run_cli())

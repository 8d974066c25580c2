"""Command-line interface.

Subcommands: simulate, ensemble, drift-check, ode, stationary,
lyapunov-grid.  Data goes to CSV files under --out (default ./out),
each with a replayable manifest; --plot additionally renders a PNG next
to the CSV.  Flags override --config file values.  Exit codes: 0
success, 1 usage/config error, 2 validation-gate failure.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from typing import Optional

import numpy as np

from . import __version__, dynamics, report
from .core import ConfigError, ModelConfig, SimplexPoint
from .engine import PROGRESS_STEPS, run, run_ensemble
from .rules import resolve_rule

DRIFT_GATE = 1e-12
ODE_MONOTONE_TOL = 1e-12


class GateFailure(Exception):
    """A validation gate did not hold; maps to exit code 2."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors are exit code 1, not argparse's 2
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _add_model_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file (or a run manifest); flags override it")
    p.add_argument("--rule", choices=["linear", "rps", "perturbed_rps", "tournament4", "custom"])
    p.add_argument("--h", type=float, help="perturbation weight for perturbed_rps")
    p.add_argument("--m", type=int, help="neighbours per vertex (linear rule; default 2)")
    p.add_argument("--table-path", help="custom rule table JSON")
    p.add_argument("--steps", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--mode", choices=["aggregate", "graph"])
    p.add_argument("--record-interval", type=int,
                   help="record cadence (default: steps/1000, at least 1)")
    p.add_argument("--out", default="out", help="output directory (default ./out)")


def _load_config_doc(path: str) -> dict:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if isinstance(doc, dict) and "config" in doc and "command" in doc:
        doc = doc["config"]  # accept a manifest written by an earlier run
    return doc


def _resolve_model_config(args) -> ModelConfig:
    doc = _load_config_doc(args.config) if args.config else {}
    rule = dict(doc.get("rule", {}))
    if args.rule is not None:
        rule["name"] = args.rule
    if args.h is not None:
        rule["h"] = args.h
    if args.m is not None:
        rule["m"] = args.m
    if args.table_path is not None:
        rule["table_path"] = args.table_path
    if "name" not in rule:
        raise ConfigError("a rule is required (--rule or --config)")
    doc["rule"] = rule
    for key in ("steps", "seed", "mode"):
        value = getattr(args, key)
        if value is not None:
            doc[key] = value
    if args.record_interval is not None:
        doc["record_interval"] = args.record_interval
    for key in ("steps", "seed"):
        if key not in doc:
            raise ConfigError(f"--{key} is required (or provide it via --config)")
    if "record_interval" not in doc:
        doc["record_interval"] = max(1, doc["steps"] // 1000)
    return ModelConfig.from_dict(doc)


def _progress(done: int, total: int) -> None:
    if total >= PROGRESS_STEPS:
        print(f"  {done}/{total} steps", file=sys.stderr)


def cmd_simulate(args) -> int:
    cfg = _resolve_model_config(args)
    if args.export_graph and cfg.mode != "graph":
        raise ConfigError("--export-graph requires --mode graph")
    t0 = time.perf_counter()
    records, state = run(cfg, progress=_progress, return_state=True)
    duration = time.perf_counter() - t0
    csv_path = f"{args.out}/trajectory.csv"
    outputs = [report.write_csv(csv_path, report.TRAJECTORY_HEADER,
                                (r.row() for r in records))]
    if args.export_graph:
        outputs += _export_graph(state, args.out)
    if args.plot:
        outputs.append(report.plot_trajectory(
            records, f"{args.out}/trajectory.png",
            title=f"{cfg.rule_name} seed={cfg.seed}"))
    outputs.append(report.write_manifest(
        csv_path, "simulate", cfg.to_dict(), duration, outputs))
    print(f"wrote {', '.join(outputs)}")
    return 0


def _export_graph(state, out_dir: str) -> list[str]:
    import os

    os.makedirs(out_dir, exist_ok=True)
    edge_path = f"{out_dir}/edges.txt"
    types_path = f"{out_dir}/vertex_types.txt"
    pairs = np.asarray(state.endpoints).reshape(-1, 2)
    with open(edge_path, "w") as fh:
        for a, b in pairs:
            fh.write(f"{a} {b}\n")
    with open(types_path, "w") as fh:
        for t in np.asarray(state.vertex_types):
            fh.write(f"{t}\n")
    return [edge_path, types_path]


def cmd_ensemble(args) -> int:
    cfg = _resolve_model_config(args)
    if args.runs < 1:
        raise ConfigError("--runs must be >= 1")
    t0 = time.perf_counter()
    finals = run_ensemble(cfg, args.runs, jobs=args.jobs)
    duration = time.perf_counter() - t0
    rows = [(i, seed) + rec.row() for i, (seed, rec) in enumerate(finals)]
    csv_path = f"{args.out}/ensemble.csv"
    outputs = [report.write_csv(csv_path, report.ENSEMBLE_HEADER, rows)]
    if args.plot:
        outputs.append(report.plot_ensemble(
            finals, f"{args.out}/ensemble.png",
            title=f"{cfg.rule_name}, {args.runs} seeds, {cfg.steps} steps"))
    manifest_cfg = {"model": cfg.to_dict(), "runs": args.runs, "jobs": args.jobs}
    outputs.append(report.write_manifest(
        csv_path, "ensemble", manifest_cfg, duration, outputs))
    print(f"wrote {', '.join(outputs)}")
    return 0


def _closed_form_field(rule_name: str, h: Optional[float]) -> dynamics.Field:
    if rule_name == "linear":
        return dynamics.zero_field()  # degree proportions are a martingale
    if rule_name == "rps":
        return dynamics.perturbed_field(0.0)
    if rule_name == "perturbed_rps":
        if h is None:
            raise ConfigError("perturbed_rps requires --h")
        return dynamics.perturbed_field(h)
    if rule_name == "tournament4":
        return dynamics.tournament_field()
    raise ConfigError(f"no closed-form field for rule {rule_name!r}")


def cmd_drift_check(args) -> int:
    table = resolve_rule(args.rule, args.h, None, args.m)
    field = _closed_form_field(args.rule, args.h)
    points = np.random.default_rng(args.seed).dirichlet((1.0, 1.0, 1.0), args.samples)
    worst = dynamics.drift_discrepancy(field, table, points)
    status = "PASS" if worst < DRIFT_GATE else "FAIL"
    print(f"rule={args.rule} samples={args.samples} "
          f"max|closed-form - multinomial drift| = {worst:.3e} "
          f"(gate {DRIFT_GATE:g}): {status}")
    if worst >= DRIFT_GATE:
        raise GateFailure(f"drift discrepancy {worst:.3e} >= {DRIFT_GATE:g}")
    return 0


def _parse_x0(text: str) -> SimplexPoint:
    try:
        w1, w2, w3 = (float(v) for v in text.split(","))
    except ValueError as exc:
        raise ConfigError(f"--x0 must be three comma-separated numbers: {text!r}") from exc
    try:
        return SimplexPoint.from_weights(w1, w2, w3)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def cmd_ode(args) -> int:
    field = dynamics.field_for_model(args.model, args.h)
    x0 = _parse_x0(args.x0)
    t0 = time.perf_counter()
    try:
        traj = dynamics.integrate(field, x0, args.dt, args.steps)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    except dynamics.IntegrationError as exc:
        raise ConfigError(str(exc)) from exc
    duration = time.perf_counter() - t0
    prods = traj.products()
    rows = [
        (t, s[0], s[1], s[2], p, 27.0 * p)
        for t, s, p in zip(traj.times, traj.states, prods)
    ]
    csv_path = f"{args.out}/ode.csv"
    outputs = [report.write_csv(csv_path, report.ODE_HEADER, rows)]
    if args.plot:
        outputs.append(report.plot_ode(
            traj, f"{args.out}/ode.png",
            title=f"{args.model} flow from {tuple(round(v, 4) for v in x0)}"))
    manifest_cfg = {"model": args.model, "h": args.h, "x0": list(x0.as_tuple()),
                    "dt": args.dt, "steps": args.steps}
    outputs.append(report.write_manifest(
        csv_path, "ode", manifest_cfg, duration, outputs))
    print(f"wrote {', '.join(outputs)}")
    interior = min(x0.as_tuple()) > 0
    if interior:
        drops = prods[:-1] - prods[1:]
        worst = float(drops.max(initial=0.0))
        if worst > ODE_MONOTONE_TOL:
            raise GateFailure(
                f"xyz decreased by {worst:.3e} in one step "
                f"(> {ODE_MONOTONE_TOL:g}) on an interior trajectory"
            )
    return 0


def cmd_stationary(args) -> int:
    t0 = time.perf_counter()
    try:
        search = dynamics.find_stationary_points(args.model, args.grid_density, args.tol)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    duration = time.perf_counter() - t0
    rows = [
        p.location.as_tuple() + (p.classification,) + p.hessian
        for p in search.points
    ]
    csv_path = f"{args.out}/stationary.csv"
    outputs = [report.write_csv(csv_path, report.STATIONARY_HEADER, rows)]
    manifest_cfg = {"model": args.model, "grid_density": args.grid_density,
                    "tol": args.tol}
    outputs.append(report.write_manifest(
        csv_path, "stationary", manifest_cfg, duration, outputs))
    for p in search.points:
        print(f"  ({p.location.x:.9f}, {p.location.y:.9f}, {p.location.z:.9f}) "
              f"{p.classification}  A={p.hessian[0]:.6g} B={p.hessian[1]:.6g} "
              f"C={p.hessian[2]:.6g}")
    print(f"{len(search.points)} stationary points "
          f"(starts={search.starts}, converged={search.converged}, "
          f"skipped={search.skipped}); wrote {', '.join(outputs)}")
    return 0


def cmd_lyapunov_grid(args) -> int:
    field = dynamics.field_for_model(args.model, args.h)
    t0 = time.perf_counter()
    points = dynamics.interior_grid(args.density)
    values = np.array([dynamics.lyapunov_derivative(field, p) for p in points])
    duration = time.perf_counter() - t0
    rows = [(p[0], p[1], p[2], v) for p, v in zip(points, values)]
    csv_path = f"{args.out}/lyapunov_grid.csv"
    outputs = [report.write_csv(csv_path, report.GRID_HEADER, rows)]
    if args.plot:
        outputs.append(report.plot_grid(
            points, values, f"{args.out}/lyapunov_grid.png",
            title=f"{args.model}: d(xyz)/dt"))
    manifest_cfg = {"model": args.model, "h": args.h, "density": args.density}
    outputs.append(report.write_manifest(
        csv_path, "lyapunov-grid", manifest_cfg, duration, outputs))
    i = int(np.argmin(values))
    print(f"min d(xyz)/dt = {values[i]:.6e} at "
          f"({points[i, 0]:.6f}, {points[i, 1]:.6f}, {points[i, 2]:.6f}); "
          f"wrote {', '.join(outputs)}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="tritype",
                     description="Three-type preferential attachment: "
                                 "simulation and mean-field analysis")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one simulation, write a trajectory CSV")
    _add_model_flags(p)
    p.add_argument("--plot", action="store_true", help="also render trajectory.png")
    p.add_argument("--export-graph", action="store_true",
                   help="write edges.txt and vertex_types.txt (graph mode)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("ensemble", help="independent runs from split seeds; per-seed finals CSV")
    _add_model_flags(p)
    p.add_argument("--runs", type=int, required=True)
    p.add_argument("--jobs", type=int, default=1, help="parallel workers (default 1)")
    p.add_argument("--plot", action="store_true", help="also render ensemble.png")
    p.set_defaults(func=cmd_ensemble)

    p = sub.add_parser("drift-check",
                       help="gate: closed-form field vs exact multinomial drift")
    p.add_argument("--rule", required=True,
                   choices=["linear", "rps", "perturbed_rps", "tournament4"])
    p.add_argument("--h", type=float)
    p.add_argument("--m", type=int)
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_drift_check)

    p = sub.add_parser("ode", help="integrate the mean-field flow (RK4)")
    p.add_argument("--model", required=True, choices=["perturbed", "tournament"])
    p.add_argument("--h", type=float, default=0.05,
                   help="perturbation weight (perturbed model; default 0.05)")
    p.add_argument("--x0", default="0.5,0.3,0.2",
                   help="start point, comma-separated weights (normalised)")
    p.add_argument("--dt", type=float, default=0.01)
    p.add_argument("--steps", type=int, default=100_000)
    p.add_argument("--out", default="out")
    p.add_argument("--plot", action="store_true", help="also render ode.png")
    p.set_defaults(func=cmd_ode)

    p = sub.add_parser("stationary",
                       help="find and classify the stationary points of the "
                            "reduced Lyapunov polynomial")
    p.add_argument("--model", required=True, choices=["perturbed", "tournament"])
    p.add_argument("--grid-density", type=int, default=30)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--out", default="out")
    p.set_defaults(func=cmd_stationary)

    p = sub.add_parser("lyapunov-grid", help="sample d(xyz)/dt on an interior grid")
    p.add_argument("--model", required=True, choices=["perturbed", "tournament"])
    p.add_argument("--h", type=float, default=0.05)
    p.add_argument("--density", type=int, default=200)
    p.add_argument("--out", default="out")
    p.add_argument("--plot", action="store_true", help="also render lyapunov_grid.png")
    p.set_defaults(func=cmd_lyapunov_grid)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except GateFailure as exc:
        print(f"gate failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

"""Command-line entry points: run, sweep and compare-braking.

Configs are JSON objects whose keys mirror the case-study parameter table;
missing keys take the defaults below and unknown keys are rejected.
All results go to files; stdout carries only the run summary.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from feascbf.acc import AccScenario, Baseline, simulate
from feascbf.dynamics import AccParams
from feascbf.sim import SimConfig, SimTrace, TraceStatus

log = logging.getLogger("feascbf")

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_INFEASIBLE = 2

TRACE_HEADER = ["t", "v", "z", "u", "delta", "qp_status",
                "b", "psi1", "phi", "b_hF", "safety_beta", "solve_us"]
SWEEP_HEADER = ["p1", "p2", "feasibility_on", "status",
                "first_infeasible_t", "min_b", "max_v", "final_v"]

# key -> (type, unit, description)
SCHEMA = {
    "mass": (float, "kg", "ego vehicle mass"),
    "f0": (float, "N", "Coulomb resistance"),
    "f1": (float, "N s/m", "viscous resistance"),
    "f2": (float, "N s^2/m^2", "aerodynamic drag"),
    "v_p": (float, "m/s", "lead vehicle speed"),
    "v_d": (float, "m/s", "desired ego speed"),
    "l0": (float, "m", "minimum gap"),
    "c_a": (float, "-", "max acceleration as a fraction of g"),
    "c_d": (float, "-", "max deceleration as a fraction of g"),
    "grav": (float, "m/s^2", "gravitational acceleration"),
    "v0": (float, "m/s", "initial ego speed"),
    "z0": (float, "m", "initial gap"),
    "p1": (float, "1/s", "slope of alpha_1"),
    "p2": (float, "1/s", "slope of alpha_2"),
    "epsilon": (float, "1/s", "CLF convergence rate"),
    "p_acc": (float, "-", "penalty on the CLF relaxation"),
    "phi_alpha": (float, "1/s", "slope of the class-K function in the phi row"),
    "dt": (float, "s", "sampling interval"),
    "T": (float, "s", "horizon"),
    "substeps": (int, "-", "RK4 substeps per interval"),
    "feasibility_on": (bool, "-", "add the phi feasibility row"),
    "baseline": (str, "-", "'None' or 'MinBrakingDistance'"),
    "output": (str, "path", "default output directory"),
}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    mass: float = 1650.0
    f0: float = 0.1
    f1: float = 5.0
    f2: float = 0.25
    v_p: float = 13.89
    v_d: float = 24.0
    l0: float = 10.0
    c_a: float = 0.4
    c_d: float = 0.4
    grav: float = 9.81
    v0: float = 6.0
    z0: float = 100.0
    p1: float = 1.0
    p2: float = 2.0
    epsilon: float = 10.0
    p_acc: float = 1.0
    phi_alpha: float = 1.0
    dt: float = 0.1
    T: float = 30.0
    substeps: int = 10
    feasibility_on: bool = True
    baseline: str = "None"
    output: Optional[str] = None

    def params(self) -> AccParams:
        return AccParams(mass=self.mass, f0=self.f0, f1=self.f1, f2=self.f2,
                         v_p=self.v_p, v_d=self.v_d, l0=self.l0, c_a=self.c_a,
                         c_d=self.c_d, grav=self.grav)

    def scenario(self) -> AccScenario:
        return AccScenario(params=self.params(), p1=self.p1, p2=self.p2,
                           epsilon=self.epsilon, p_acc=self.p_acc,
                           feasibility_on=self.feasibility_on,
                           baseline=Baseline(self.baseline), phi_alpha=self.phi_alpha)

    def sim_config(self, record_timing: bool = True) -> SimConfig:
        return SimConfig(initial_state=(self.v0, self.z0), dt=self.dt, T=self.T,
                         substeps=self.substeps, record_timing=record_timing)


def parse_config(data: dict) -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    values = {}
    for key, raw in data.items():
        if key not in SCHEMA:
            raise ConfigError(f"unknown config key {key!r}")
        kind = SCHEMA[key][0]
        if key == "output" and raw is None:
            values[key] = None
        elif kind is bool:
            if not isinstance(raw, bool):
                raise ConfigError(f"config key {key!r} must be true or false")
            values[key] = raw
        elif kind is int:
            if isinstance(raw, bool) or not isinstance(raw, int):
                raise ConfigError(f"config key {key!r} must be an integer")
            values[key] = raw
        elif kind is float:
            if isinstance(raw, bool) or not isinstance(raw, (int, float)):
                raise ConfigError(f"config key {key!r} must be a number")
            values[key] = float(raw)
        else:
            if not isinstance(raw, str):
                raise ConfigError(f"config key {key!r} must be a string")
            values[key] = raw
    if "baseline" in values and values["baseline"] not in {b.value for b in Baseline}:
        raise ConfigError(f"config key 'baseline' has unknown value {values['baseline']!r}")
    cfg = RunConfig(**values)
    try:
        cfg.scenario()
        cfg.sim_config()
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return cfg


def load_config(path) -> RunConfig:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    return parse_config(data)


def _fmt(value) -> str:
    if isinstance(value, str):
        return value
    value = float(value)
    if math.isnan(value):
        return "nan"
    return repr(value)


def write_trace_csv(trace: SimTrace, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TRACE_HEADER)
        for r in trace.records:
            vals = r.values
            writer.writerow([_fmt(x) for x in (
                r.t, r.state[0], r.state[1], r.u[0], r.delta, r.qp_status,
                vals["b"], vals["psi1"], vals["phi"], vals["b_hF"],
                vals["safety_beta"], r.solve_us)])


def read_trace_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        rows = []
        for row in csv.DictReader(fh):
            rows.append({k: (v if k == "qp_status" else float(v)) for k, v in row.items()})
        return rows


def summarize(trace: SimTrace) -> dict:
    speeds = [r.state[0] for r in trace.records]
    if trace.final_state is not None and trace.status is TraceStatus.COMPLETED:
        speeds.append(trace.final_state[0])
    empty = not trace.records
    final_v = trace.final_state[0] if trace.final_state is not None else math.nan
    if trace.status is TraceStatus.INFEASIBLE:
        final_v = trace.records[-1].state[0]
    return {
        "status": "Completed" if trace.status is TraceStatus.COMPLETED else "InfeasibleAt",
        "first_infeasible_t": trace.infeasible_t,
        "min_b": None if empty else float(trace.column("b").min()),
        "min_psi1": None if empty else float(trace.column("psi1").min()),
        "max_v": float(max(speeds)) if speeds else None,
        "final_v": float(final_v),
        "negative_speed": trace.negative_speed,
        "steps": len(trace.records),
    }


def sparkline(values: Sequence[float], width: int = 60) -> str:
    ticks = " .:-=+*#%@"
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        return ""
    idx = np.linspace(0, values.size - 1, min(width, values.size)).astype(int)
    sample = values[idx]
    lo, hi = float(sample.min()), float(sample.max())
    span = hi - lo if hi > lo else 1.0
    return "".join(ticks[int((s - lo) / span * (len(ticks) - 1))] for s in sample)


def _print_summary(summary: dict, trace: SimTrace) -> None:
    print(json.dumps(summary, sort_keys=True))
    if trace.records:
        print(f"v  |{sparkline([r.state[0] for r in trace.records])}|")


def _ensure_dir(out) -> Path:
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    if not os.access(out, os.W_OK):
        raise OSError(f"output directory {out} is not writable")
    return out


def cmd_run(config_path, out_dir=None) -> int:
    try:
        cfg = load_config(config_path)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out_dir = out_dir or cfg.output
    if out_dir is None:
        print("config error: no output directory (use --out or 'output')", file=sys.stderr)
        return EXIT_CONFIG
    try:
        out = _ensure_dir(out_dir)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    trace = simulate(cfg.scenario(), cfg.sim_config())
    write_trace_csv(trace, out / "trace.csv")
    summary = summarize(trace)
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    _print_summary(summary, trace)
    return EXIT_OK if trace.status is TraceStatus.COMPLETED else EXIT_INFEASIBLE


def _cell_name(p1: float, p2: float, on: bool) -> str:
    return f"trace_p1={p1:g}_p2={p2:g}_{'on' if on else 'off'}.csv"


def _run_cell(args):
    cfg, p1, p2, on, out, timing = args
    cell = dataclasses.replace(cfg, p1=p1, p2=p2, feasibility_on=on)
    trace = simulate(cell.scenario(), cell.sim_config(record_timing=timing))
    write_trace_csv(trace, Path(out) / _cell_name(p1, p2, on))
    return summarize(trace)


def cmd_sweep(config_path, p1_list, p2_list, out_dir, workers=None, timing=False) -> int:
    try:
        cfg = load_config(config_path)
        if not p1_list or not p2_list:
            raise ConfigError("p1 and p2 lists must be nonempty")
        cfg.scenario()
        for p in (*p1_list, *p2_list):
            if not p > 0:
                raise ConfigError(f"slopes must be positive, got {p}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        out = _ensure_dir(out_dir)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    cells = [(cfg, p1, p2, on, str(out), timing)
             for p1 in p1_list for p2 in p2_list for on in (True, False)]
    workers = workers or os.cpu_count() or 1
    if workers == 1:
        summaries = [_run_cell(c) for c in cells]
    else:
        with ProcessPoolExecutor(max_workers=min(workers, len(cells))) as pool:
            summaries = list(pool.map(_run_cell, cells))
    with open(out / "sweep.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SWEEP_HEADER)
        for (_, p1, p2, on, _, _), s in zip(cells, summaries):
            fi = "" if s["first_infeasible_t"] is None else _fmt(s["first_infeasible_t"])
            writer.writerow([_fmt(p1), _fmt(p2), str(on).lower(), s["status"], fi,
                             _fmt(s["min_b"]), _fmt(s["max_v"]), _fmt(s["final_v"])])
    n_inf = sum(s["status"] != "Completed" for s in summaries)
    print(json.dumps({"cells": len(cells), "infeasible_cells": n_inf}, sort_keys=True))
    return EXIT_OK


def cmd_compare_braking(config_path, out_dir) -> int:
    try:
        cfg = load_config(config_path)
        if cfg.baseline != Baseline.MIN_BRAKING_DISTANCE.value:
            raise ConfigError(
                "compare-braking needs 'baseline': 'MinBrakingDistance' in the config")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        out = _ensure_dir(out_dir)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    phi_cfg = dataclasses.replace(cfg, baseline=Baseline.NONE.value, feasibility_on=True)
    bk_cfg = dataclasses.replace(cfg, feasibility_on=False)
    phi_trace = simulate(phi_cfg.scenario(), phi_cfg.sim_config())
    bk_trace = simulate(bk_cfg.scenario(), bk_cfg.sim_config())
    write_trace_csv(phi_trace, out / "trace_phi.csv")
    write_trace_csv(bk_trace, out / "trace_braking.csv")
    comparison = {"phi": summarize(phi_trace), "braking": summarize(bk_trace)}
    (out / "comparison.json").write_text(json.dumps(comparison, indent=2, sort_keys=True) + "\n")
    print(json.dumps(comparison, sort_keys=True))
    return EXIT_OK


def _float_list(text: str) -> list[float]:
    try:
        return [float(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}")


def _setup_logging() -> None:
    level = os.environ.get("CBF_FEAS_LOG", "error").lower()
    levels = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}
    logging.basicConfig(stream=sys.stderr, level=levels.get(level, logging.ERROR),
                        format="%(levelname)s %(name)s: %(message)s")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="feascbf", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="simulate one ACC scenario")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=None)

    p = sub.add_parser("sweep", help="grid over p1 x p2 with the feasibility row on and off")
    p.add_argument("--config", required=True)
    p.add_argument("--p1", type=_float_list, required=True)
    p.add_argument("--p2", type=_float_list, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--timing", action="store_true",
                   help="record solve wall-time (makes traces non-reproducible)")

    p = sub.add_parser("compare-braking", help="phi constraint vs minimum braking distance")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    _setup_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    if args.command == "run":
        return cmd_run(args.config, args.out)
    if args.command == "sweep":
        return cmd_sweep(args.config, args.p1, args.p2, args.out, args.workers, args.timing)
    return cmd_compare_braking(args.config, args.out)


if __name__ == "__main__":
    sys.exit(main())

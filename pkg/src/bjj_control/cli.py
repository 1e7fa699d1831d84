"""Command-line front end: ``python -m bjj_control <command> ...``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

from .errors import BJJError, ConfigError, ConvergenceError, TableFormatError
from .metrics import coherent_squeezing, fidelity, number_squeezing
from .model import JunctionConfig, ground_state, tau_to_rabi
from .propagate import evolve
from .sweep import (
    SCHEMES, SweepPlan, atomic_write_text, check_scheme, make_schedule,
    run_sweep, table_to_csv, table_to_json,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

DEFAULTS = {
    "n_particles": 10,
    "lambda_initial": 0.0,
    "lambda_final": 50.0,
    "tf_over_tr": 0.1,
    "scheme": "esta_h2_nu5",
    "nu": None,
    "steps": None,
    "samples": 200,
    "workers": 1,
    "n_list": None,
    "tf_grid": None,
    "schemes": None,
    "robustness": True,
}
TRAJECTORY_COLUMNS = ("t_over_tr", "lambda", "fidelity", "xi_n_sq", "xi_s_db", "alpha")
ROBUSTNESS_COLUMNS = ("scheme", "n_particles", "tf_over_tr", "fidelity", "s_m", "s_t", "eta", "error")
FIGURE_SCHEMES = ("adiabatic", "sta", "esta_h1_nu5", "esta_h2_nu5", "esta_h2_nu1")


@dataclass
class RunSpec:
    command: str
    config_path: Path | None
    out: Path | None
    values: dict = field(default_factory=dict)

    def junction(self, n=None, tf=None) -> JunctionConfig:
        v = self.values
        return JunctionConfig.from_rabi_units(
            int(v["n_particles"] if n is None else n), float(v["lambda_initial"]),
            float(v["lambda_final"]), float(v["tf_over_tr"] if tf is None else tf))

    def scheme(self) -> str:
        name = self.values["scheme"]
        nu = self.values.get("nu")
        if nu is not None and name.startswith("esta_"):
            # "--scheme esta_h2 --nu 1" and "--scheme esta_h2_nu5 --nu 1" both mean esta_h2_nu1
            stem = name.rsplit("_nu", 1)[0] if "_nu" in name else name
            name = f"{stem}_nu{int(nu)}"
        return check_scheme(name)

    def plan(self) -> SweepPlan:
        v = self.values
        n_list = v["n_list"] or [v["n_particles"]]
        tf_grid = v["tf_grid"] or [v["tf_over_tr"]]
        schemes = v["schemes"] or [self.scheme()]
        return SweepPlan(tuple(int(n) for n in n_list), tuple(float(t) for t in tf_grid),
                         tuple(schemes), float(v["lambda_initial"]), float(v["lambda_final"]),
                         bool(v["robustness"]), v["steps"])


def _load_config(path: Path) -> dict:
    try:
        data = json.loads(path.read_text())
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}: {exc.msg}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected a JSON object")
    unknown = set(data) - set(DEFAULTS)
    if unknown:
        raise ConfigError(f"{path}: unknown keys {sorted(unknown)}")
    return data


def build_spec(args: argparse.Namespace) -> RunSpec:
    values = dict(DEFAULTS)
    config_path = Path(args.config) if args.config else None
    if config_path is not None:
        values.update(_load_config(config_path))
    overrides = {"n_particles": args.n, "lambda_final": args.lambda_final,
                 "tf_over_tr": args.tf_over_tr, "scheme": args.scheme, "nu": args.nu,
                 "steps": args.steps, "workers": args.workers}
    values.update({k: v for k, v in overrides.items() if v is not None})
    if getattr(args, "no_robustness", False):
        values["robustness"] = False
    if getattr(args, "figure", None) is not None:
        values["figure"] = args.figure
    spec = RunSpec(args.command, config_path, Path(args.out) if args.out else None, values)
    spec.junction()  # validate before any work
    for n in values["n_list"] or []:
        spec.junction(n=n)
    if values["steps"] is not None and int(values["steps"]) < 1:
        raise ConfigError("steps must be >= 1")
    if args.command in ("simulate",):
        spec.scheme()
    return spec


def _fmt(x) -> str:
    return format(float(x), ".17g")


def _csv_text(columns, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    w.writerows(rows)
    return buf.getvalue()


def trajectory_rows(scheme: str, config: JunctionConfig, samples: int = 200, steps=None):
    """Rows of (t/t_R, Lambda, F, xi_N^2, xi_S^2 [dB], alpha) along one run."""
    schedule, _ = make_schedule(scheme, config)
    start = ground_state(config, config.lambda_initial)
    target = ground_state(config, config.lambda_final)
    if steps is None:
        steps = evolve(start, schedule, config).steps
    every = max(1, steps // samples)

    def observe(tau, state):
        try:
            _, db, alpha = coherent_squeezing(state, config)
        except BJJError:
            db, alpha = math.nan, 0.0
        return (tau_to_rabi(tau), float(schedule(tau)), fidelity(target, state),
                number_squeezing(state, config), db, alpha)

    result = evolve(start, schedule, config, steps=steps, sample_every=every, observe=observe)
    return [row for _, row in result.trajectory]


def cmd_simulate(spec: RunSpec) -> str:
    rows = trajectory_rows(spec.scheme(), spec.junction(), int(spec.values["samples"]),
                           spec.values["steps"])
    return _csv_text(TRAJECTORY_COLUMNS, [[_fmt(x) for x in r] for r in rows])


def _sweep_text(table, out: Path | None) -> str:
    if out is not None and out.suffix == ".csv":
        return table_to_csv(table)
    return table_to_json(table)


def cmd_sweep(spec: RunSpec) -> str:
    table = run_sweep(spec.plan(), workers=int(spec.values["workers"]))
    return _sweep_text(table, spec.out)


def robustness_rows(table):
    rows = []
    for r in table.rows:
        m = r.metrics
        vals = [None] * 4 if m is None else [m.fidelity, m.s_m, m.s_t, m.eta]
        rows.append([r.scheme, r.n_particles, _fmt(r.tf_over_tr),
                     *["" if x is None else _fmt(x) for x in vals],
                     r.error or ""])
    return rows


def cmd_robustness(spec: RunSpec) -> str:
    spec.values["robustness"] = True
    table = run_sweep(spec.plan(), workers=int(spec.values["workers"]))
    return _csv_text(ROBUSTNESS_COLUMNS, robustness_rows(table))


def cmd_emit_plot_data(spec: RunSpec) -> str:
    """Long-format CSV: trajectories (figure 2) or metrics against t_f (figures 3, 4)."""
    figure = int(spec.values.get("figure") or 3)
    schemes = spec.values["schemes"] or list(FIGURE_SCHEMES)
    if figure == 2:
        config = spec.junction()
        rows = []
        for scheme in schemes:
            for r in trajectory_rows(check_scheme(scheme), config, int(spec.values["samples"]),
                                     spec.values["steps"]):
                rows.append([scheme, *[_fmt(x) for x in r]])
        return _csv_text(("scheme",) + TRAJECTORY_COLUMNS, rows)
    spec.values["schemes"] = schemes
    spec.values["robustness"] = figure == 4
    table = run_sweep(spec.plan(), workers=int(spec.values["workers"]))
    if figure == 4:
        return _csv_text(ROBUSTNESS_COLUMNS, robustness_rows(table))
    rows = [[r.scheme, r.n_particles, _fmt(r.tf_over_tr),
             "" if r.metrics is None else _fmt(r.metrics.fidelity), r.error or ""]
            for r in table.rows]
    return _csv_text(("scheme", "n_particles", "tf_over_tr", "fidelity", "error"), rows)


COMMANDS = {
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
    "robustness": cmd_robustness,
    "emit-plot-data": cmd_emit_plot_data,
}


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bjj-control", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON file of flat key/value settings")
        p.add_argument("--out", help="output file (stdout if omitted)")
        p.add_argument("--n", type=int, help="particle number N")
        p.add_argument("--lambda-final", type=float)
        p.add_argument("--tf-over-tr", type=float, help="protocol duration in Rabi times")
        p.add_argument("--scheme", help=f"one of {', '.join(SCHEMES)}")
        p.add_argument("--nu", type=int, help="number of eSTA interior nodes")
        p.add_argument("--steps", type=int, help="fixed propagation step count")
        p.add_argument("--workers", type=int, help="worker processes for sweeps")
        if name == "sweep":
            p.add_argument("--no-robustness", action="store_true",
                           help="skip the S_m / S_t evaluations")
        if name == "emit-plot-data":
            p.add_argument("--figure", type=int, choices=(2, 3, 4), default=3)
    return parser


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        spec = build_spec(args)
        text = COMMANDS[args.command](spec)
        if spec.out is None:
            sys.stdout.write(text)
        else:
            atomic_write_text(spec.out, text)
    except (ConfigError, TableFormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ConvergenceError, BJJError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


__all__ = ["main", "make_parser", "RunSpec", "build_spec", "trajectory_rows"]

"""Batch evaluation of control schemes over (N, t_f) grids, with persistence."""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
import time
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .errors import ConfigError, TableFormatError
from .esta import VARIANTS, design_correction
from .metrics import MetricsRecord, evaluate
from .model import JunctionConfig
from .schedules import ControlSchedule

SCHEMA = "bjj-control/result-table"
SCHEMA_VERSION = 1
BASE_SCHEMES = ("constant", "adiabatic", "sta")
SCHEMES = BASE_SCHEMES + tuple(VARIANTS)

CSV_COLUMNS = (
    "scheme", "n_particles", "tf_over_tr", "lambda_initial", "lambda_final",
    "fidelity", "xi_n_sq", "xi_s_sq", "xi_s_db", "alpha", "s_m", "s_t", "eta",
    "runtime", "lambdas", "error", "diagnostics",
)
METRIC_FIELDS = ("fidelity", "xi_n_sq", "xi_s_sq", "xi_s_db", "alpha", "s_m", "s_t", "eta")


def check_scheme(name: str) -> str:
    if name not in SCHEMES:
        raise ConfigError(f"unknown scheme {name!r}; choose from {', '.join(SCHEMES)}")
    return name


def make_schedule(scheme: str, config: JunctionConfig):
    """Schedule for ``scheme`` plus a dict of design diagnostics."""
    check_scheme(scheme)
    if scheme in BASE_SCHEMES:
        return ControlSchedule(config, scheme), {}
    design = design_correction(VARIANTS[scheme], config)
    diagnostics = {
        "g2": [design.g2.real, design.g2.imag],
        "k2": [[k.real, k.imag] for k in design.k2],
        "sign": design.sign,
        "guard_fidelities": {str(k): v for k, v in design.guard_fidelities.items()},
    }
    return design.schedule, diagnostics


@dataclass(frozen=True)
class SweepPlan:
    n_particles: tuple
    tf_grid: tuple
    schemes: tuple
    lambda_initial: float = 0.0
    lambda_final: float = 50.0
    robustness: bool = True
    steps: int | None = None

    def __post_init__(self):
        if not self.n_particles or not self.tf_grid or not self.schemes:
            raise ConfigError("sweep grids must be nonempty")
        if any(not t > 0 for t in self.tf_grid):
            raise ConfigError("t_f/t_R values must be positive")
        for s in self.schemes:
            check_scheme(s)
        for n in self.n_particles:
            JunctionConfig.from_rabi_units(n, self.lambda_initial, self.lambda_final, 1.0)

    def cells(self):
        """(scheme, N, t_f/t_R) in deterministic order."""
        order = {s: i for i, s in enumerate(SCHEMES)}
        schemes = sorted(set(self.schemes), key=order.get)
        return [(s, n, tf) for s in schemes
                for n in sorted(set(self.n_particles))
                for tf in sorted(set(self.tf_grid))]


@dataclass
class ResultRow:
    scheme: str
    n_particles: int
    tf_over_tr: float
    lambda_initial: float
    lambda_final: float
    metrics: MetricsRecord | None
    lambdas: list = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)
    error: str | None = None
    runtime: float = field(default=0.0, compare=False)

    def to_dict(self):
        d = asdict(self)
        d["metrics"] = None if self.metrics is None else self.metrics.to_dict()
        return d

    @classmethod
    def from_dict(cls, d, where="row"):
        try:
            metrics = None if d["metrics"] is None else MetricsRecord(**d["metrics"])
            return cls(
                scheme=str(d["scheme"]), n_particles=int(d["n_particles"]),
                tf_over_tr=float(d["tf_over_tr"]), lambda_initial=float(d["lambda_initial"]),
                lambda_final=float(d["lambda_final"]), metrics=metrics,
                lambdas=[float(x) for x in d.get("lambdas", [])],
                diagnostics=dict(d.get("diagnostics", {})), error=d.get("error"),
                runtime=float(d.get("runtime", 0.0)),
            )
        except KeyError as exc:
            raise TableFormatError(f"{where}: missing field {exc.args[0]!r}") from exc
        except (TypeError, ValueError) as exc:
            raise TableFormatError(f"{where}: {exc}") from exc


@dataclass
class ResultTable:
    rows: list = field(default_factory=list)

    def lookup(self, scheme, n_particles, tf_over_tr) -> ResultRow:
        for row in self.rows:
            if (row.scheme, row.n_particles) == (scheme, n_particles) and \
                    math.isclose(row.tf_over_tr, tf_over_tr, rel_tol=1e-12):
                return row
        raise KeyError((scheme, n_particles, tf_over_tr))

    def __len__(self):
        return len(self.rows)


def run_cell(scheme, n, tf, lambda_initial=0.0, lambda_final=50.0,
             robustness=True, steps=None) -> ResultRow:
    t0 = time.perf_counter()
    row = ResultRow(scheme, n, tf, lambda_initial, lambda_final, None)
    try:
        config = JunctionConfig.from_rabi_units(n, lambda_initial, lambda_final, tf)
        schedule, row.diagnostics = make_schedule(scheme, config)
        if schedule.correction is not None:
            row.lambdas = [float(x) for x in schedule.correction.node_values]
        row.metrics = evaluate(schedule, config, steps=steps, robustness=robustness)
    except Exception as exc:  # recorded in-row; a sweep never aborts on one cell
        row.error = f"{type(exc).__name__}: {exc}"
        row.diagnostics["traceback"] = traceback.format_exc(limit=3)
    row.runtime = time.perf_counter() - t0
    return row


def _run_cell_args(args):
    return run_cell(*args)


def run_sweep(plan: SweepPlan, workers: int = 1) -> ResultTable:
    jobs = [(s, n, tf, plan.lambda_initial, plan.lambda_final, plan.robustness, plan.steps)
            for s, n, tf in plan.cells()]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_run_cell_args, jobs))
    else:
        rows = [_run_cell_args(j) for j in jobs]
    return ResultTable(rows)


def atomic_write_text(path, text: str):
    """Write via a temporary file in the same directory, then rename."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _fmt(x) -> str:
    return "" if x is None else format(float(x), ".17g")


def table_to_json(table: ResultTable) -> str:
    doc = {"schema": SCHEMA, "version": SCHEMA_VERSION,
           "rows": [r.to_dict() for r in table.rows]}
    return json.dumps(doc, indent=1)


def table_to_csv(table: ResultTable) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in table.rows:
        m = r.metrics
        writer.writerow([
            r.scheme, r.n_particles, _fmt(r.tf_over_tr), _fmt(r.lambda_initial),
            _fmt(r.lambda_final),
            *[("" if m is None else _fmt(getattr(m, f))) for f in METRIC_FIELDS],
            _fmt(r.runtime), " ".join(_fmt(x) for x in r.lambdas),
            "" if r.error is None else json.dumps(r.error),  # escapes control characters
            json.dumps(r.diagnostics, sort_keys=True),
        ])
    return buf.getvalue()


def persist(table: ResultTable, path):
    path = Path(path)
    text = table_to_csv(table) if path.suffix == ".csv" else table_to_json(table)
    atomic_write_text(path, text)


def _load_json(text, path):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise TableFormatError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    if not isinstance(doc, dict) or doc.get("schema") != SCHEMA:
        raise TableFormatError(f"{path}: not a result table (schema field missing or wrong)")
    if doc.get("version") != SCHEMA_VERSION:
        raise TableFormatError(f"{path}: unsupported schema version {doc.get('version')!r}")
    rows = doc.get("rows")
    if not isinstance(rows, list):
        raise TableFormatError(f"{path}: 'rows' must be a list")
    return ResultTable([ResultRow.from_dict(r, where=f"{path}: row {i}") for i, r in enumerate(rows)])


def _load_csv(text, path):
    reader = csv.reader(io.StringIO(text, newline=""))
    header = next(reader, None)
    if header is None or tuple(header) != CSV_COLUMNS:
        raise TableFormatError(f"{path}: line 1: unexpected header {header}")
    rows = []
    for rec in reader:
        where = f"{path}: line {reader.line_num}"
        if len(rec) != len(CSV_COLUMNS):
            raise TableFormatError(f"{where}: expected {len(CSV_COLUMNS)} fields, got {len(rec)}")
        d = dict(zip(CSV_COLUMNS, rec))
        try:
            metrics = None
            if d["fidelity"] != "":
                metrics = {f: (float(d[f]) if d[f] != "" else None) for f in METRIC_FIELDS}
            diagnostics = json.loads(d["diagnostics"]) if d["diagnostics"] else {}
            error = json.loads(d["error"]) if d["error"] else None
        except ValueError as exc:
            raise TableFormatError(f"{where}: {exc}") from exc
        rows.append(ResultRow.from_dict({
            "scheme": d["scheme"], "n_particles": d["n_particles"],
            "tf_over_tr": d["tf_over_tr"], "lambda_initial": d["lambda_initial"],
            "lambda_final": d["lambda_final"], "metrics": metrics,
            "lambdas": d["lambdas"].split() if d["lambdas"] else [],
            "diagnostics": diagnostics, "error": error,
            "runtime": d["runtime"] or 0.0,
        }, where=where))
    return ResultTable(rows)


def load(path) -> ResultTable:
    path = Path(path)
    text = path.read_text()
    if path.suffix == ".csv":
        return _load_csv(text, path)
    return _load_json(text, path)

#!/usr/bin/env python3
"""Write the plot data behind the fidelity, trajectory and robustness figures.

Usage:
    python scripts/reproduce_figures.py --out-dir results [--n 10 100] [--workers 4]

Produces, per particle number N:
    trajectories_N{N}.csv   time series for t_f = 0.1 t_R (one block per scheme)
    fidelity_N{N}.csv       F against t_f for every scheme
    robustness_N{N}.csv     S_m, S_t, eta against t_f for every scheme
    sweep_N{N}.json         full result table, including eSTA node values
"""

import argparse
import time
from pathlib import Path

from bjj_control.cli import FIGURE_SCHEMES, ROBUSTNESS_COLUMNS, robustness_rows, trajectory_rows
from bjj_control.model import JunctionConfig
from bjj_control.sweep import SweepPlan, atomic_write_text, persist, run_sweep

TF_GRID = (0.02, 0.05, 0.1, 0.15, 0.2)


def csv_text(header, rows):
    return "\n".join([",".join(header)] + [",".join(map(str, r)) for r in rows]) + "\n"


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--out-dir", default="results")
    ap.add_argument("--n", type=int, nargs="+", default=[10, 100])
    ap.add_argument("--lambda-final", type=float, default=50.0)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    for n in args.n:
        t0 = time.perf_counter()
        cfg = JunctionConfig.from_rabi_units(n, 0.0, args.lambda_final, 0.1)
        rows = []
        for scheme in FIGURE_SCHEMES:
            for r in trajectory_rows(scheme, cfg, samples=200):
                rows.append([scheme, *(format(x, ".17g") for x in r)])
        atomic_write_text(out / f"trajectories_N{n}.csv", csv_text(
            ("scheme", "t_over_tr", "lambda", "fidelity", "xi_n_sq", "xi_s_db", "alpha"), rows))

        plan = SweepPlan((n,), TF_GRID, FIGURE_SCHEMES, 0.0, args.lambda_final, robustness=True)
        table = run_sweep(plan, workers=args.workers)
        persist(table, out / f"sweep_N{n}.json")
        atomic_write_text(out / f"fidelity_N{n}.csv", csv_text(
            ("scheme", "tf_over_tr", "fidelity"),
            [(r.scheme, r.tf_over_tr, "" if r.metrics is None else format(r.metrics.fidelity, ".17g"))
             for r in table.rows]))
        atomic_write_text(out / f"robustness_N{n}.csv", csv_text(ROBUSTNESS_COLUMNS, robustness_rows(table)))
        print(f"N={n}: done in {time.perf_counter() - t0:.0f}s")


if __name__ == "__main__":
    main()

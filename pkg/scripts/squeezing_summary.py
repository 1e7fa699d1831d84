#!/usr/bin/env python3
"""Squeezing and robustness summary for STA vs the H2 eSTA schedule.

Defaults: N = 100, Lambda 0 -> 50, t_f = 0.05 t_R.  Prints xi_S^2 in dB
(10 log10, with the 20 log10 value alongside), S_m, S_t, eta and the
STA/eSTA improvement factors.
"""

import argparse

from bjj_control.metrics import coherent_squeezing, evaluate
from bjj_control.model import JunctionConfig, ground_state
from bjj_control.sweep import make_schedule


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--n", type=int, default=100)
    ap.add_argument("--lambda-final", type=float, default=50.0)
    ap.add_argument("--tf-over-tr", type=float, default=0.05)
    args = ap.parse_args()
    cfg = JunctionConfig.from_rabi_units(args.n, 0.0, args.lambda_final, args.tf_over_tr)

    _, target_db, _ = coherent_squeezing(ground_state(cfg, cfg.lambda_final), cfg)
    print(f"target ground state: xi_S^2 = {target_db:.2f} dB (20log10: {2 * target_db:.2f})")
    recs = {}
    for scheme in ("sta", "esta_h2_nu5"):
        rec = recs[scheme] = evaluate(make_schedule(scheme, cfg)[0], cfg)
        print(f"{scheme:12s} F={rec.fidelity:.6f}  xi_S^2={rec.xi_s_db:.2f} dB "
              f"(20log10: {2 * rec.xi_s_db:.2f})  S_m={rec.s_m:.4g}  S_t={rec.s_t:.4g}  eta={rec.eta:.4g}")
    sta, esta = recs["sta"], recs["esta_h2_nu5"]
    print(f"improvement: S_m x{sta.s_m / esta.s_m:.1f}, S_t x{sta.s_t / esta.s_t:.1f}")


if __name__ == "__main__":
    main()

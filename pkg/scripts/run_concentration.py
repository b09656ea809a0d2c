#!/usr/bin/env python3
"""Concentration check for the random feature matrix: spectral deviation
of (1/N) A A* from the identity on separated point sets, across feature
counts, plus the failure fraction at the bound's minimal N.

Usage: python scripts/run_concentration.py [--m 32] [--eta 0.1]
"""

import argparse

import numpy as np

from rrff import (
    RngState,
    StudentTParams,
    concentration_experiment,
    separation_for_eta,
    theorem_conditions,
)
from rrff.io import write_report


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--m", type=int, default=32)
    ap.add_argument("--nu", type=float, default=3.0)
    ap.add_argument("--sigma", type=float, default=1.0)
    ap.add_argument("--eta", type=float, default=0.1)
    ap.add_argument("--delta", type=float, default=0.1)
    ap.add_argument("--trials", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="out/concentration")
    args = ap.parse_args()

    params = StudentTParams(nu=args.nu, sigma=args.sigma)
    kappa = separation_for_eta(params, args.m, args.eta)
    cond = theorem_conditions(args.m, kappa, params, args.delta)
    print(f"kappa={kappa:.4f} eta={cond.eta:.4f} N_min={cond.n_min}")

    rows = []
    for n in (512, 2048, 8192):
        rep = concentration_experiment(args.m, n, params, kappa,
                                       args.trials, RngState(args.seed))
        med = float(np.median(rep.deviations))
        rows.append([n, f"{med:.6e}", f"{rep.failure_fraction:.4f}"])
        print(f"N={n}: median deviation {med:.4f}, "
              f"failure fraction {rep.failure_fraction:.2f}")
    rep = concentration_experiment(args.m, cond.n_min, params, kappa,
                                   100, RngState(args.seed + 1))
    rows.append([cond.n_min, f"{np.median(rep.deviations):.6e}",
                 f"{rep.failure_fraction:.4f}"])
    print(f"N=N_min={cond.n_min}: failure fraction {rep.failure_fraction:.2f} "
          f"(bound {args.delta})")
    write_report(f"{args.out}/scaling.csv",
                 ["n_features", "median_deviation", "failure_fraction"], rows)


if __name__ == "__main__":
    main()

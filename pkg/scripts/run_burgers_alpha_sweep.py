#!/usr/bin/env python3
"""Regularization sweep on the viscous Burgers benchmark: mean relative
test error over a logarithmic alpha grid, with 5% noise on training inputs
and outputs and on test inputs. Inputs are scaled by the grid spacing and
the fits use complex coefficients; one shared Gram matrix serves the whole
sweep per trial.

Usage: python scripts/run_burgers_alpha_sweep.py [--trials 3]
"""

import argparse

import numpy as np

from rrff import (
    INF,
    BurgersConfig,
    RegularizationSpec,
    RngState,
    StudentTParams,
    add_relative_noise_rows,
    build_feature_matrix,
    fit_complex,
    fit_complex_sweep,
    gen_burgers,
    relative_test_error,
    sample_feature_weights,
    uniform_grid,
)
from rrff.io import write_report


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--trials", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--n-features", type=int, default=10_000)
    ap.add_argument("--n-train", type=int, default=1800)
    ap.add_argument("--n-test", type=int, default=200)
    ap.add_argument("--dt", type=float, default=2.5e-4)
    ap.add_argument("--alphas", default="1e-4,1e-3,1e-2,1e-1,1,10")
    ap.add_argument("--out", default="out/burgers")
    args = ap.parse_args()

    grid_n = 128
    grid = uniform_grid(grid_n)
    cfg = BurgersConfig(modes=256, dt=args.dt)
    params = StudentTParams(nu=INF, sigma=0.2)
    alphas = [float(a) for a in args.alphas.split(",")]
    positive = [a for a in alphas if a > 0.0]

    print("generating data...")
    data = gen_burgers(args.n_train + args.n_test, cfg, grid,
                       RngState(args.seed).child(1))
    tr_in = data.inputs[: args.n_train] / grid_n
    tr_out = data.outputs[: args.n_train]
    te_in = data.inputs[args.n_train:] / grid_n
    te_out = data.outputs[args.n_train:]

    errors = {a: [] for a in alphas}
    for trial in range(args.trials):
        rng = RngState(args.seed + trial)
        tin = add_relative_noise_rows(tr_in, 0.05, rng.child(2))
        tout = add_relative_noise_rows(tr_out, 0.05, rng.child(3))
        testin = add_relative_noise_rows(te_in, 0.05, rng.child(4))
        w = sample_feature_weights(params, grid_n, args.n_features,
                                   rng.child(5))
        a_mat = build_feature_matrix(w, tin)
        a_test = build_feature_matrix(w, testin)
        coeffs = dict(zip(positive, fit_complex_sweep(a_mat, tout, w,
                                                      positive, p=2.0)))
        for alpha in alphas:
            if alpha == 0.0:
                coeff, _ = fit_complex(a_mat, tout, w,
                                       RegularizationSpec(0.0, 2.0))
            else:
                coeff = coeffs[alpha]
            err = relative_test_error((a_test @ coeff).real, te_out)
            errors[alpha].append(err)
            print(f"trial {trial} alpha={alpha:g}: {err:.4f}")

    rows = []
    for alpha in alphas:
        errs = np.array(errors[alpha])
        rows.append([alpha, f"{errs.mean():.6e}", f"{errs.std(ddof=0):.6e}"])
        print(f"alpha={alpha:g}: {errs.mean():.4f} +- {errs.std(ddof=0):.4f}")
    write_report(f"{args.out}/alpha_sweep.csv",
                 ["alpha", "mean_error", "std_error"], rows)


if __name__ == "__main__":
    main()

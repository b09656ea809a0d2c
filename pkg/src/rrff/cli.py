"""Command-line experiment runner: data generation, training, evaluation,
regularization sweeps, and the concentration check."""

from __future__ import annotations

import argparse
import math
import sys
import time
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from . import io, pde_data, pipeline, theory
from .config import ConfigError, ExperimentConfig, config_hash, load_config
from .pde_data import BurgersConfig, DarcyConfig
from .sampling import INF, RngState, StudentTParams
from .solver import RegularizationSpec

# gen-data derives train/test/validation sets from disjoint substreams
_STREAM_TRAIN, _STREAM_TEST, _STREAM_VALID = 1, 2, 3


class CliError(RuntimeError):
    """User-facing command failure."""


def _pow2_at_least(n: int) -> int:
    return 1 << max(n - 1, 1).bit_length()


def _problem_grid(cfg: ExperimentConfig, rng: RngState) -> np.ndarray:
    if cfg.problem == "darcy":
        if cfg.grid_kind != "uniform":
            raise ConfigError("darcy supports only the uniform grid")
        return DarcyConfig(grid_size=cfg.grid_size).grid_points()
    if cfg.grid_kind == "jittered":
        return pde_data.jittered_grid(cfg.grid_size, rng.child(7))
    return pde_data.uniform_grid(cfg.grid_size)


def generate_dataset(cfg: ExperimentConfig, count: int, rng: RngState,
                     grid: np.ndarray) -> pde_data.Dataset:
    if cfg.problem == "advection1":
        return pde_data.gen_advection_I(count, grid, rng)
    if cfg.problem == "advection2":
        return pde_data.gen_advection_II(count, grid, rng)
    if cfg.problem == "advection3":
        return pde_data.gen_advection_III(count, grid, rng)
    if cfg.problem == "burgers":
        bc = BurgersConfig(
            viscosity=cfg.viscosity, final_time=cfg.final_time,
            modes=max(256, _pow2_at_least(cfg.grid_size)), dt=cfg.dt,
        )
        return pde_data.gen_burgers(count, bc, grid, rng)
    if cfg.problem == "darcy":
        return pde_data.gen_darcy(count, DarcyConfig(grid_size=cfg.grid_size), rng)
    raise ConfigError(f"unknown problem {cfg.problem!r}")


def cmd_gen_data(cfg: ExperimentConfig, out: Path) -> None:
    """Write train/, test/ and validation/ dataset containers under out."""
    root_rng = RngState(cfg.seed)
    grid = _problem_grid(cfg, root_rng)
    stamp = config_hash(cfg)
    for name, count, stream in (
        ("train", cfg.n_train, _STREAM_TRAIN),
        ("test", cfg.n_test, _STREAM_TEST),
        ("validation", cfg.n_validation, _STREAM_VALID),
    ):
        ds = generate_dataset(cfg, count, root_rng.child(stream), grid)
        ds.metadata["config_hash"] = stamp
        ds.metadata["role"] = name
        io.write_dataset(out / name, ds)
        print(f"wrote {count} {cfg.problem} samples to {out / name}")


def _scaled_inputs(cfg: ExperimentConfig, ds: pde_data.Dataset) -> pde_data.Dataset:
    """Apply the config's input scale (e.g. a quadrature weight turning the
    Euclidean inner product into a discretized function-space one)."""
    if cfg.input_scale == 1.0:
        return ds
    return pde_data.Dataset(
        inputs=cfg.input_scale * ds.inputs, outputs=ds.outputs,
        input_grid=ds.input_grid, output_grid=ds.output_grid,
        metadata=dict(ds.metadata),
    )


def _train_once(cfg: ExperimentConfig, train_ds: pde_data.Dataset,
                trial_rng: RngState) -> pipeline.TrainedOperator:
    noisy = pipeline.corrupt_dataset(
        train_ds, trial_rng,
        input_level=cfg.noise_train_input, output_level=cfg.noise_train_output,
    )
    split = pipeline.split_grid(np.asarray(train_ds.output_grid), trial_rng.seed)
    params = StudentTParams(nu=cfg.nu, sigma=cfg.sigma)
    reg = RegularizationSpec(alpha=cfg.alpha, p=cfg.p)
    return pipeline.train(noisy, split, params, cfg.n_features, reg, trial_rng,
                          coefficient_field=cfg.coefficient_field)


def cmd_train(cfg: ExperimentConfig, data: Path, out: Path) -> None:
    train_ds = _scaled_inputs(cfg, io.read_dataset(data / "train"))
    op = _train_once(cfg, train_ds, RngState(cfg.seed))
    op.config["config_hash"] = config_hash(cfg)
    io.write_operator(out / "model", op)
    res = op.solve_report.residual_norms
    print(
        f"trained {cfg.problem}: N={cfg.n_features} alpha={cfg.alpha} "
        f"max residual {res.max():.3e} -> {out / 'model'}"
    )


_EVAL_HEADER = ["trial", "alpha", "error", "conventional_error",
                "train_time", "infer_time", "config_hash"]


def _eval_trials(cfg: ExperimentConfig, train_ds, test_ds, alpha: float,
                 seed: int):
    """Train/evaluate over cfg.trials seeds at the given alpha; returns
    (per-trial EvalReports, rows in the report layout)."""
    stamp = config_hash(cfg)
    rows, reports = [], []
    eff = ExperimentConfig(**{
        **{f: getattr(cfg, f) for f in cfg.__dataclass_fields__}, "alpha": alpha,
    })
    for trial in range(cfg.trials):
        trial_rng = RngState(seed + trial)
        t0 = time.perf_counter()
        op = _train_once(eff, train_ds, trial_rng)
        train_time = time.perf_counter() - t0
        report = pipeline.evaluate(
            op, test_ds, trial_rng.child(99),
            noise_level=cfg.noise_test_input, query_mode="validation",
        )
        report.train_time = train_time
        reports.append(report)
        rows.append([trial, alpha, f"{report.mean_error:.6e}",
                     f"{report.conventional_mean_error:.6e}",
                     f"{train_time:.3f}", f"{report.infer_time:.3f}", stamp])
    means = np.array([r.mean_error for r in reports])
    conv = np.array([r.conventional_mean_error for r in reports])
    rows.append(["mean", alpha, f"{means.mean():.6e}", f"{conv.mean():.6e}",
                 "", "", stamp])
    return reports, rows


def cmd_eval(cfg: ExperimentConfig, data: Path, out: Path) -> None:
    train_ds = _scaled_inputs(cfg, io.read_dataset(data / "train"))
    test_ds = _scaled_inputs(cfg, io.read_dataset(data / "test"))
    _, rows = _eval_trials(cfg, train_ds, test_ds, cfg.alpha, cfg.seed)
    out.mkdir(parents=True, exist_ok=True)
    io.write_report(out / "eval.csv", _EVAL_HEADER, rows)
    print(f"mean error over {cfg.trials} trials: {rows[-1][2]} -> {out / 'eval.csv'}")


def cmd_alpha_sweep(cfg: ExperimentConfig, data: Path, out: Path,
                    alphas: list[float]) -> None:
    if not alphas:
        raise CliError("empty alpha grid")
    train_ds = _scaled_inputs(cfg, io.read_dataset(data / "train"))
    test_ds = _scaled_inputs(cfg, io.read_dataset(data / "test"))
    stamp = config_hash(cfg)
    rows = []
    for alpha in alphas:
        reports, _ = _eval_trials(cfg, train_ds, test_ds, alpha, cfg.seed)
        means = np.array([r.mean_error for r in reports])
        rows.append([alpha, f"{means.mean():.6e}", f"{means.std(ddof=0):.6e}",
                     stamp])
        print(f"alpha={alpha:g}: mean error {means.mean():.4e}")
    out.mkdir(parents=True, exist_ok=True)
    io.write_report(out / "alpha_sweep.csv",
                    ["alpha", "mean_error", "std_error", "config_hash"], rows)


def cmd_theory(args, out: Path) -> None:
    params = StudentTParams(nu=INF if math.isinf(args.nu) else args.nu,
                            sigma=args.sigma)
    conditions = theory.theorem_conditions(
        args.m, args.kappa, params, args.delta, c=args.bound_constant
    )
    n = args.n if args.n else conditions.n_min
    if n is None:
        raise CliError(
            f"conditions unsatisfiable (eta={conditions.eta:.3g} >= 1); "
            "increase kappa or decrease m"
        )
    report = theory.concentration_experiment(
        args.m, n, params, args.kappa, args.trials, RngState(args.seed)
    )
    rows = [[t, f"{d:.8e}", f"{2 * report.eta:.8e}", int(d > 2 * report.eta)]
            for t, d in enumerate(report.deviations)]
    out.mkdir(parents=True, exist_ok=True)
    io.write_report(out / "concentration.csv",
                    ["trial", "deviation", "bound", "exceeds"], rows)
    summary = [
        ["m", report.m], ["N", report.n], ["nu", report.nu],
        ["sigma", report.sigma], ["kappa", report.kappa],
        ["eta", f"{report.eta:.8e}"], ["n_min", conditions.n_min],
        ["delta", args.delta], ["trials", report.trials],
        ["failure_fraction", f"{report.failure_fraction:.4f}"],
    ]
    io.write_report(out / "concentration_summary.csv", ["key", "value"], summary)
    print(
        f"m={report.m} N={report.n} eta={report.eta:.4g}: "
        f"failure fraction {report.failure_fraction:.3f} over {report.trials} trials"
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rrff", description="Random-feature operator learning experiments"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_config=True, needs_data=False):
        if needs_config:
            p.add_argument("--config", required=True, help="experiment config file")
        if needs_data:
            p.add_argument("--data", required=True, type=Path,
                           help="dataset directory from gen-data")
        p.add_argument("--seed", type=int, default=None, help="override seed")
        p.add_argument("--trials", type=int, default=None, help="override trials")
        p.add_argument("--out", type=Path, default=Path("out"),
                       help="output directory")
        p.add_argument("--threads", type=int, default=None,
                       help="cap BLAS/FFT thread count")

    common(sub.add_parser("gen-data", help="generate dataset containers"))
    common(sub.add_parser("train", help="train one operator"), needs_data=True)
    common(sub.add_parser("eval", help="train + evaluate over trials"),
           needs_data=True)
    sweep = sub.add_parser("alpha-sweep", help="evaluate an alpha grid")
    common(sweep, needs_data=True)
    sweep.add_argument(
        "--alphas", default="1e-4,1e-3,1e-2,1e-1,1,10",
        help="comma-separated regularization strengths",
    )
    tc = sub.add_parser("theory-check", help="concentration experiment")
    tc.add_argument("--m", type=int, required=True)
    tc.add_argument("--kappa", type=float, required=True)
    tc.add_argument("--nu", type=float, default=math.inf)
    tc.add_argument("--sigma", type=float, default=1.0)
    tc.add_argument("--n", type=int, default=0,
                    help="feature count (default: theorem minimum)")
    tc.add_argument("--delta", type=float, default=0.1)
    tc.add_argument("--bound-constant", type=float,
                    default=theory.DEFAULT_BOUND_CONSTANT)
    common(tc, needs_config=False)
    return parser


def _apply_overrides(cfg: ExperimentConfig, args) -> ExperimentConfig:
    updates = {}
    if args.seed is not None:
        updates["seed"] = args.seed
    if args.trials is not None:
        updates["trials"] = args.trials
    if not updates:
        return cfg
    fields = {f: getattr(cfg, f) for f in cfg.__dataclass_fields__}
    fields.update(updates)
    return ExperimentConfig(**fields)


def run(argv=None) -> None:
    args = build_parser().parse_args(argv)
    limit = threadpool_limits(limits=args.threads) if args.threads else None
    try:
        if args.command == "theory-check":
            if args.seed is None:
                args.seed = 0
            args.trials = args.trials or 20
            cmd_theory(args, args.out)
            return
        cfg = _apply_overrides(load_config(args.config), args)
        if args.command == "gen-data":
            cmd_gen_data(cfg, args.out)
        elif args.command == "train":
            cmd_train(cfg, args.data, args.out)
        elif args.command == "eval":
            cmd_eval(cfg, args.data, args.out)
        elif args.command == "alpha-sweep":
            alphas = [float(a) for a in args.alphas.split(",") if a.strip()]
            cmd_alpha_sweep(cfg, args.data, args.out, alphas)
    finally:
        if limit is not None:
            limit.unregister()


def main(argv=None) -> int:
    try:
        run(argv)
        return 0
    except (CliError, ConfigError, io.FormatError, FileNotFoundError,
            ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

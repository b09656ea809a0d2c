"""Synthetic benchmark data: advection (exact transport), viscous Burgers
(pseudo-spectral), and Darcy flow (finite differences + CG)."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .sampling import GpSpec, RngState, sample_gp_periodic

GP_FINE_RESOLUTION = 1024  # fine periodic grid backing thresholded GP inputs

# Stream offsets so each consumer owns an independent substream.
_STREAM_PARAMS = 11
_STREAM_GP = 12


class SolverInstabilityError(RuntimeError):
    """Time integration produced non-finite values."""


class CgError(RuntimeError):
    """Conjugate gradients failed to reach the requested tolerance."""

    def __init__(self, iterations: int, residual: float):
        self.iterations = iterations
        self.residual = residual
        super().__init__(
            f"CG did not converge in {iterations} iterations "
            f"(relative residual {residual:.3e})"
        )


@dataclass(frozen=True)
class Dataset:
    """Paired function samples on fixed collocation grids.

    inputs[k] holds sample k of the input function at input_grid points;
    outputs[k] the matching output function at output_grid points.
    """

    inputs: np.ndarray  # (M, n)
    outputs: np.ndarray  # (M, m)
    input_grid: np.ndarray  # (n,) or (n, dx)
    output_grid: np.ndarray  # (m,) or (m, dy)
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.inputs.shape[0] != self.outputs.shape[0]:
            raise ValueError("inputs and outputs must have equal row counts")
        if self.inputs.shape[1] != np.atleast_2d(self.input_grid.T).shape[-1]:
            raise ValueError("input grid length does not match input columns")
        if self.outputs.shape[1] != np.atleast_2d(self.output_grid.T).shape[-1]:
            raise ValueError("output grid length does not match output columns")

    @property
    def n_samples(self) -> int:
        return self.inputs.shape[0]


@dataclass(frozen=True)
class BurgersConfig:
    viscosity: float = 0.1
    final_time: float = 1.0
    modes: int = 256
    dt: float = 1e-4

    def __post_init__(self):
        if self.viscosity <= 0 or self.final_time <= 0 or self.dt <= 0:
            raise ValueError("viscosity, final_time and dt must be positive")
        if self.modes < 2 or self.modes & (self.modes - 1):
            raise ValueError(f"modes must be a power of two, got {self.modes}")


@dataclass(frozen=True)
class DarcyConfig:
    grid_size: int = 29  # interior s x s grid on (0,1)^2
    source: np.ndarray | None = None  # fixed right-hand side; default constant 1
    cg_tol: float = 1e-10
    cg_max_iter: int = 20_000

    def __post_init__(self):
        if self.grid_size < 3:
            raise ValueError("grid_size must be >= 3")
        if not (0 < self.cg_tol < 1):
            raise ValueError("cg_tol must be in (0, 1)")

    def source_field(self) -> np.ndarray:
        s = self.grid_size
        if self.source is None:
            return np.ones((s, s))
        w = np.asarray(self.source, dtype=float)
        if w.shape != (s, s):
            raise ValueError(f"source must be {s}x{s}, got {w.shape}")
        return w

    def grid_points(self) -> np.ndarray:
        """Interior collocation points (i/(s+1), j/(s+1)) flattened row-major."""
        s = self.grid_size
        coords = np.arange(1, s + 1) / (s + 1)
        x, y = np.meshgrid(coords, coords, indexing="ij")
        return np.column_stack([x.ravel(), y.ravel()])


# ---------------------------------------------------------------------------
# advection


def _square_wave(x, c, b, h):
    return np.where(np.abs(x - c) <= b / 2.0, h, 0.0)


def _half_period_shift(x):
    return np.mod(x - 0.5, 1.0)


def gen_advection_I(count: int, grid: np.ndarray, rng: RngState) -> Dataset:
    """Square-wave inputs transported exactly by half the period.

    (c, b, h) are uniform on [0.3,0.7] x [0.3,0.6] x [1,2]; the output is the
    closed-form solution u((x - 0.5) mod 1), avoiding numerical diffusion.
    """
    grid = np.asarray(grid, dtype=float).ravel()
    g = rng.child(_STREAM_PARAMS).generator()
    c = g.uniform(0.3, 0.7, count)
    b = g.uniform(0.3, 0.6, count)
    h = g.uniform(1.0, 2.0, count)
    shifted = _half_period_shift(grid)
    inputs = _square_wave(grid[None, :], c[:, None], b[:, None], h[:, None])
    outputs = _square_wave(shifted[None, :], c[:, None], b[:, None], h[:, None])
    return Dataset(
        inputs=inputs, outputs=outputs, input_grid=grid, output_grid=grid,
        metadata={"problem": "advection1", "seed": rng.seed, "count": count},
    )


ADVECTION2_RANGES = {
    "c1": (0.3, 0.7), "b": (0.3, 0.6), "h1": (1.0, 2.0),
    "h2": (0.5, 1.0), "a": (5.0, 10.0), "c2": (0.3, 0.7),
}


def gen_advection_II(count: int, grid: np.ndarray, rng: RngState) -> Dataset:
    """Square wave plus a half-ellipse bump, transported by half the period.

    Parameter ranges for (h2, a, c2) are an artifact convention (recorded in
    metadata); (c1, b, h1) reuse the square-wave ranges.
    """
    grid = np.asarray(grid, dtype=float).ravel()
    g = rng.child(_STREAM_PARAMS).generator()
    draws = {k: g.uniform(lo, hi, count) for k, (lo, hi) in ADVECTION2_RANGES.items()}

    def evaluate(x):
        sq = _square_wave(
            x[None, :], draws["c1"][:, None], draws["b"][:, None],
            draws["h1"][:, None],
        )
        ell2 = (
            draws["h2"][:, None] ** 2
            - draws["a"][:, None] ** 2 * (x[None, :] - draws["c2"][:, None]) ** 2
        )
        return sq + np.sqrt(np.maximum(ell2, 0.0))

    return Dataset(
        inputs=evaluate(grid), outputs=evaluate(_half_period_shift(grid)),
        input_grid=grid, output_grid=grid,
        metadata={
            "problem": "advection2", "seed": rng.seed, "count": count,
            "ranges": dict(ADVECTION2_RANGES),
        },
    )


def _periodic_linear_interp(fine_values: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Linear interpolation of values on the uniform periodic grid {j/r}."""
    r = fine_values.shape[-1]
    pos = np.mod(x, 1.0) * r
    j0 = np.floor(pos).astype(int) % r
    frac = pos - np.floor(pos)
    j1 = (j0 + 1) % r
    return fine_values[..., j0] * (1.0 - frac) + fine_values[..., j1] * frac


def gen_advection_III(
    count: int, grid: np.ndarray, rng: RngState,
    fine_resolution: int = GP_FINE_RESOLUTION,
) -> Dataset:
    """Sign-thresholded GP inputs (+-1) transported by half the period."""
    grid = np.asarray(grid, dtype=float).ravel()
    spec = GpSpec(mean=0.0, amplitude=1.0, shift=9.0, power=2.0,
                  resolution=fine_resolution, ndim=1)
    gp_rng = rng.child(_STREAM_GP)
    shifted = _half_period_shift(grid)
    inputs = np.empty((count, grid.size))
    outputs = np.empty((count, grid.size))
    for k in range(count):
        u0 = sample_gp_periodic(spec, gp_rng.child(k))
        inputs[k] = np.where(_periodic_linear_interp(u0, grid) >= 0.0, 1.0, -1.0)
        outputs[k] = np.where(_periodic_linear_interp(u0, shifted) >= 0.0, 1.0, -1.0)
    return Dataset(
        inputs=inputs, outputs=outputs, input_grid=grid, output_grid=grid,
        metadata={"problem": "advection3", "seed": rng.seed, "count": count,
                  "fine_resolution": fine_resolution},
    )


# ---------------------------------------------------------------------------
# Burgers


def solve_burgers(
    u0: np.ndarray, cfg: BurgersConfig, times: np.ndarray | None = None
) -> np.ndarray:
    """Pseudo-spectral viscous Burgers on the periodic unit interval.

    The nonlinear term is evaluated in physical space with 2/3 de-aliasing;
    diffusion is integrated exactly by an integrating factor; the advective
    part uses classical 4th-order Runge-Kutta on the transformed variable.
    Returns the solution at final_time, or at each requested time.
    """
    u0 = np.asarray(u0, dtype=float)
    if u0.shape[-1] != cfg.modes:
        raise ValueError(f"u0 length {u0.shape[-1]} != modes {cfg.modes}")
    r = cfg.modes
    k = 2.0 * np.pi * np.fft.rfftfreq(r, d=1.0 / r)
    dealias = np.abs(np.fft.rfftfreq(r, d=1.0 / r)) <= r // 3
    lin = -cfg.viscosity * k**2

    def nonlinear(vhat):
        u = np.fft.irfft(np.where(dealias, vhat, 0.0), n=r)
        return -0.5j * k * np.fft.rfft(u * u)

    checkpoints = (
        np.asarray([cfg.final_time]) if times is None
        else np.asarray(times, dtype=float)
    )
    if np.any(np.diff(checkpoints) <= 0) or checkpoints[0] <= 0:
        raise ValueError("times must be positive and strictly increasing")

    vhat = np.fft.rfft(u0)
    out = np.empty(checkpoints.shape + u0.shape)
    t_prev = 0.0
    for ci, t_end in enumerate(checkpoints):
        span = t_end - t_prev
        steps = max(1, math.ceil(span / cfg.dt))
        dt = span / steps
        e_half = np.exp(lin * dt / 2.0)
        e_full = e_half**2
        for _ in range(steps):
            k1 = nonlinear(vhat)
            k2 = nonlinear(e_half * (vhat + dt / 2.0 * k1))
            k3 = nonlinear(e_half * vhat + dt / 2.0 * k2)
            k4 = nonlinear(e_full * vhat + dt * e_half * k3)
            vhat = e_full * vhat + dt / 6.0 * (
                e_full * k1 + 2.0 * e_half * (k2 + k3) + k4
            )
        if not np.all(np.isfinite(vhat)):
            raise SolverInstabilityError(
                f"non-finite spectrum before t={t_end} (dt={cfg.dt})"
            )
        out[ci] = np.fft.irfft(vhat, n=r)
        t_prev = t_end
    return out[0] if times is None else out


def _match_to_solver_grid(grid: np.ndarray, modes: int) -> np.ndarray | None:
    """Indices of grid points on the solver grid {j/modes}, or None."""
    idx = np.round(grid * modes).astype(int)
    if np.allclose(idx / modes, grid, atol=1e-9):
        return idx % modes
    return None


def gen_burgers(
    count: int, cfg: BurgersConfig, grid: np.ndarray, rng: RngState,
    gp: GpSpec | None = None,
) -> Dataset:
    """GP initial conditions evolved to final_time, sampled at the grid."""
    grid = np.asarray(grid, dtype=float).ravel()
    if gp is None:
        gp = GpSpec(mean=0.0, amplitude=25.0, shift=25.0, power=2.0,
                    resolution=cfg.modes, ndim=1)
    elif gp.resolution != cfg.modes:
        raise ValueError("GP resolution must equal solver modes")
    gp_rng = rng.child(_STREAM_GP)
    u0 = np.stack([sample_gp_periodic(gp, gp_rng.child(k)) for k in range(count)])
    w = solve_burgers(u0, cfg)
    idx = _match_to_solver_grid(grid, cfg.modes)
    if idx is not None:
        inputs, outputs = u0[:, idx], w[:, idx]
    else:
        inputs = _periodic_linear_interp(u0, grid)
        outputs = _periodic_linear_interp(w, grid)
    return Dataset(
        inputs=inputs, outputs=outputs, input_grid=grid, output_grid=grid,
        metadata={
            "problem": "burgers", "seed": rng.seed, "count": count,
            "viscosity": cfg.viscosity, "final_time": cfg.final_time,
            "modes": cfg.modes, "dt": cfg.dt,
        },
    )


# ---------------------------------------------------------------------------
# Darcy


def _face_coefficients(a: np.ndarray):
    """Harmonic averages of the cell coefficient on interior faces; boundary
    faces reuse the adjacent cell value."""
    s = a.shape[0]
    harm = lambda l, r: 2.0 * l * r / (l + r)  # noqa: E731
    ax = np.empty((s + 1, s))  # faces between rows i-1 and i
    ax[1:s] = harm(a[:-1], a[1:])
    ax[0], ax[s] = a[0], a[-1]
    ay = np.empty((s, s + 1))
    ay[:, 1:s] = harm(a[:, :-1], a[:, 1:])
    ay[:, 0], ay[:, s] = a[:, 0], a[:, -1]
    return ax, ay


def solve_darcy(log_perm_input: np.ndarray, cfg: DarcyConfig) -> np.ndarray:
    """-div(e^u grad v) = w on (0,1)^2 with zero boundary values.

    Five-point finite differences with harmonic face averaging of e^u,
    solved by conjugate gradients to the relative residual cg_tol.
    """
    s = cfg.grid_size
    u = np.asarray(log_perm_input, dtype=float).reshape(s, s)
    a = np.exp(u)
    ax, ay = _face_coefficients(a)
    h2 = (s + 1.0) ** 2
    w = cfg.source_field().ravel()
    diag = (ax[:s] + ax[1:] + ay[:, :s] + ay[:, 1:]) * h2

    def apply(vflat):
        v = vflat.reshape(s, s)
        out = diag * v
        out[1:] -= ax[1:s] * h2 * v[:-1]
        out[:-1] -= ax[1:s] * h2 * v[1:]
        out[:, 1:] -= ay[:, 1:s] * h2 * v[:, :-1]
        out[:, :-1] -= ay[:, 1:s] * h2 * v[:, 1:]
        return out.ravel()

    b = w
    x = np.zeros(s * s)
    r = b - apply(x)
    p = r.copy()
    rs = r @ r
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return x.reshape(s, s)
    for it in range(1, cfg.cg_max_iter + 1):
        ap = apply(p)
        alpha = rs / (p @ ap)
        x += alpha * p
        r -= alpha * ap
        rs_new = r @ r
        if math.sqrt(rs_new) <= cfg.cg_tol * bnorm:
            return x.reshape(s, s)
        p = r + (rs_new / rs) * p
        rs = rs_new
    raise CgError(cfg.cg_max_iter, math.sqrt(rs) / bnorm)


def gen_darcy(count: int, cfg: DarcyConfig, rng: RngState) -> Dataset:
    """Two-valued log-permeability inputs (log 3 / log 12 from a thresholded
    GP) with the corresponding pressure solutions."""
    s = cfg.grid_size
    spec = GpSpec(mean=0.0, amplitude=1.0, shift=9.0, power=2.0,
                  resolution=s, ndim=2)
    gp_rng = rng.child(_STREAM_GP)
    inputs = np.empty((count, s * s))
    outputs = np.empty((count, s * s))
    for k in range(count):
        beta = sample_gp_periodic(spec, gp_rng.child(k))
        u = np.where(beta >= 0.0, math.log(12.0), math.log(3.0))
        inputs[k] = u.ravel()
        outputs[k] = solve_darcy(u, cfg).ravel()
    grid = cfg.grid_points()
    return Dataset(
        inputs=inputs, outputs=outputs, input_grid=grid, output_grid=grid,
        metadata={"problem": "darcy", "seed": rng.seed, "count": count,
                  "grid_size": s, "cg_tol": cfg.cg_tol},
    )


# ---------------------------------------------------------------------------
# grids


def uniform_grid(n: int) -> np.ndarray:
    """n uniformly spaced points {j/n} on the periodic unit interval."""
    return np.arange(n) / n


def jittered_grid(n: int, rng: RngState) -> np.ndarray:
    """Nonuniform 1D grid: seeded jitter of the uniform grid, kept sorted
    and strictly inside [0, 1)."""
    g = rng.generator()
    base = np.arange(n) / n
    jitter = g.uniform(-0.35, 0.35, n) / n
    pts = np.clip(base + jitter, 0.0, 1.0 - 1e-9)
    return np.sort(pts)


def jittered_grid_2d(side: int, rng: RngState) -> np.ndarray:
    """Nonuniform tensor-product grid on (0,1)^2, (side^2, 2) points."""
    r = rng.generator()
    coords = np.arange(1, side + 1) / (side + 1)
    jx = r.uniform(-0.3, 0.3, side) / (side + 1)
    jy = r.uniform(-0.3, 0.3, side) / (side + 1)
    x, y = np.meshgrid(np.sort(coords + jx), np.sort(coords + jy), indexing="ij")
    return np.column_stack([x.ravel(), y.ravel()])

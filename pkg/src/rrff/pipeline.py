"""End-to-end operator learning: grid splitting, feature-model training,
mesh-composed inference, and relative test errors."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from .features import (
    FeatureModel,
    FeatureWeights,
    build_feature_matrix,
    predict,
    sample_feature_weights,
)
from .fem import (
    Interpolant,
    Mesh1D,
    Mesh2D,
    MeshError,
    build_mesh_1d,
    interpolate,
    triangulate_2d,
)
from .pde_data import Dataset
from .sampling import RngState, StudentTParams, add_relative_noise_rows
from .solver import RegularizationSpec, SolveReport, fit, fit_complex

_STREAM_WEIGHTS = 21
_STREAM_SPLIT = 22
_STREAM_NOISE = 23


class MetricError(ValueError):
    """Degenerate error metric (zero denominator norm)."""


@dataclass(frozen=True)
class GridSplit:
    """Two-thirds/one-third partition of the output-grid node indices."""

    train_idx: np.ndarray
    valid_idx: np.ndarray
    seed: int

    def __post_init__(self):
        union = np.sort(np.concatenate([self.train_idx, self.valid_idx]))
        if union.size != np.unique(union).size:
            raise ValueError("split index sets overlap")


@dataclass(frozen=True)
class TrainedOperator:
    """A feature model on the training nodes plus the recovery mesh that
    extends nodal predictions to the rest of the output domain."""

    model: FeatureModel
    mesh: Mesh1D | Mesh2D
    input_grid: np.ndarray
    split: GridSplit
    config: dict = field(default_factory=dict)
    solve_report: SolveReport | None = None

    @property
    def train_nodes(self) -> np.ndarray:
        return self.split.train_idx


@dataclass
class EvalReport:
    """Per-sample relative errors with both denominator conventions."""

    errors: np.ndarray  # prediction-norm denominator
    conventional_errors: np.ndarray  # truth-norm denominator
    train_time: float = 0.0
    infer_time: float = 0.0

    @property
    def mean_error(self) -> float:
        return float(np.mean(self.errors))

    @property
    def conventional_mean_error(self) -> float:
        return float(np.mean(self.conventional_errors))


def _extreme_indices(grid: np.ndarray) -> np.ndarray:
    """Endpoint indices (1D) or convex-hull vertex indices (2D)."""
    if grid.ndim == 1:
        return np.array([int(np.argmin(grid)), int(np.argmax(grid))])
    try:
        return np.asarray(ConvexHull(grid).vertices, dtype=int)
    except QhullError as exc:
        raise MeshError(f"degenerate output grid: {exc}") from exc


def split_grid(output_grid: np.ndarray, seed: int) -> GridSplit:
    """Seeded two-thirds/one-third node split.

    Extreme nodes (1D endpoints, 2D hull vertices) always land in the
    training set so every validation node is interpolable by the recovery
    mesh without extrapolation.
    """
    grid = np.asarray(output_grid, dtype=float)
    n = grid.shape[0]
    if n < 3:
        raise ValueError(f"need at least 3 output nodes, got {n}")
    n_train = round(2 * n / 3)
    forced = np.unique(_extreme_indices(grid))
    n_train = max(n_train, forced.size)
    g = RngState(seed, _STREAM_SPLIT).generator()
    rest = np.setdiff1d(np.arange(n), forced)
    rest = g.permutation(rest)
    train = np.sort(np.concatenate([forced, rest[: n_train - forced.size]]))
    valid = np.sort(rest[n_train - forced.size:])
    return GridSplit(train_idx=train, valid_idx=valid, seed=seed)


def _build_recovery_mesh(nodes: np.ndarray):
    if nodes.ndim == 1:
        return build_mesh_1d(nodes)
    return triangulate_2d(nodes)


def train(
    dataset: Dataset,
    split: GridSplit,
    params: StudentTParams,
    n_features: int,
    reg: RegularizationSpec,
    rng: RngState,
    coefficient_field: str = "real",
) -> TrainedOperator:
    """Sample N feature weights, fit coefficients for every training node
    against the dataset outputs, and build the recovery mesh. alpha = 0
    gives the unregularized baseline; alpha > 0 the frequency-weighted fit.

    `coefficient_field` selects real coefficients (predictions are even
    functions of the input, adequate for one-signed input families) or
    complex ones (needed when the target operator has odd symmetry)."""
    if coefficient_field not in ("real", "complex"):
        raise ValueError(f"unknown coefficient field {coefficient_field!r}")
    weights = sample_feature_weights(
        params, dataset.inputs.shape[1], n_features, rng.child(_STREAM_WEIGHTS)
    )
    a = build_feature_matrix(weights, dataset.inputs)
    targets = dataset.outputs[:, split.train_idx]
    if coefficient_field == "complex":
        coeff, report = fit_complex(a, targets, weights, reg)
    else:
        coeff, report = fit(a, targets, weights, reg)
    model = FeatureModel(
        weights=weights, coefficients=coeff, reg=reg,
        metadata={"problem": dataset.metadata.get("problem")},
    )
    grid = np.asarray(dataset.output_grid)
    mesh = _build_recovery_mesh(
        grid[split.train_idx] if grid.ndim == 1 else grid[split.train_idx, :]
    )
    return TrainedOperator(
        model=model, mesh=mesh, input_grid=np.asarray(dataset.input_grid),
        split=split,
        config={
            "nu": params.nu, "sigma": params.sigma, "n_features": n_features,
            "alpha": reg.alpha, "p": reg.p, "seed": rng.seed,
            "coefficient_field": coefficient_field,
        },
        solve_report=report,
    )


def _nodal_to_mesh_order(op: TrainedOperator, nodal: np.ndarray) -> np.ndarray:
    # a 1D mesh stores its nodes sorted; realign values with that ordering
    if isinstance(op.mesh, Mesh1D):
        return nodal[..., op.mesh.order]
    return nodal


def infer(op: TrainedOperator, u: np.ndarray, queries: np.ndarray) -> np.ndarray:
    """Predict nodal output values from input samples, then extend to the
    query points by piecewise-linear interpolation on the recovery mesh."""
    u = np.asarray(u, dtype=float)
    single = u.ndim == 1
    nodal = _nodal_to_mesh_order(op, predict(op.model, np.atleast_2d(u)))
    out = np.stack(
        [interpolate(Interpolant(op.mesh, row), queries) for row in nodal]
    )
    return out[0] if single else out


def _per_sample_errors(
    predictions: np.ndarray, truths: np.ndarray, conventional: bool
) -> np.ndarray:
    predictions = np.atleast_2d(np.asarray(predictions, dtype=float))
    truths = np.atleast_2d(np.asarray(truths, dtype=float))
    if predictions.shape != truths.shape:
        raise ValueError(
            f"shape mismatch: {predictions.shape} vs {truths.shape}"
        )
    denom = np.linalg.norm(truths if conventional else predictions, axis=1)
    if np.any(denom == 0.0):
        raise MetricError("zero denominator norm in relative error")
    return np.linalg.norm(truths - predictions, axis=1) / denom


def relative_test_error(
    predictions: np.ndarray, truths: np.ndarray, conventional: bool = False
) -> float:
    """Mean over samples of ||truth - prediction|| / ||prediction||.

    The denominator is the prediction norm by default; `conventional`
    switches to the truth norm."""
    return float(np.mean(_per_sample_errors(predictions, truths, conventional)))


def evaluate(
    op: TrainedOperator,
    dataset: Dataset,
    rng: RngState,
    noise_level: float = 0.0,
    query_mode: str = "validation",
) -> EvalReport:
    """Corrupt the test inputs with relative noise, run inference at the
    requested node set, and score against the clean ground truth."""
    if query_mode not in ("validation", "training"):
        raise ValueError(f"unknown query mode {query_mode!r}")
    idx = op.split.valid_idx if query_mode == "validation" else op.split.train_idx
    grid = np.asarray(dataset.output_grid)
    queries = grid[idx] if grid.ndim == 1 else grid[idx, :]
    inputs = dataset.inputs
    if noise_level > 0.0:
        inputs = add_relative_noise_rows(
            inputs, noise_level, rng.child(_STREAM_NOISE)
        )
    t0 = time.perf_counter()
    preds = infer(op, inputs, queries)
    infer_time = time.perf_counter() - t0
    truths = dataset.outputs[:, idx]
    return EvalReport(
        errors=_per_sample_errors(preds, truths, conventional=False),
        conventional_errors=_per_sample_errors(preds, truths, conventional=True),
        infer_time=infer_time,
    )


def corrupt_dataset(
    dataset: Dataset,
    rng: RngState,
    input_level: float = 0.0,
    output_level: float = 0.0,
) -> Dataset:
    """Copy of the dataset with row-wise relative noise on inputs and/or
    outputs (each row keeps the exact requested relative level)."""
    noise_rng = rng.child(_STREAM_NOISE)
    inputs = dataset.inputs
    outputs = dataset.outputs
    if input_level > 0.0:
        inputs = add_relative_noise_rows(inputs, input_level, noise_rng.child(0))
    if output_level > 0.0:
        outputs = add_relative_noise_rows(outputs, output_level, noise_rng.child(1))
    meta = dict(dataset.metadata)
    meta.update({"noise_input": input_level, "noise_output": output_level})
    return Dataset(
        inputs=inputs, outputs=outputs, input_grid=dataset.input_grid,
        output_grid=dataset.output_grid, metadata=meta,
    )

"""Complex random Fourier feature matrices and trained feature expansions."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .sampling import RngState, StudentTParams, sample_student_t


class DimensionMismatchError(ValueError):
    """Input dimensions inconsistent with the feature weights."""


@dataclass(frozen=True)
class FeatureWeights:
    """Sampled frequency vectors: omega has one weight vector per row."""

    omega: np.ndarray  # (N, n)
    params: StudentTParams
    seed: int | None = None

    def __post_init__(self):
        omega = np.asarray(self.omega, dtype=float)
        if omega.ndim != 2 or omega.shape[0] < 1:
            raise ValueError(f"omega must be a nonempty 2D array, got {omega.shape}")
        if not np.all(np.isfinite(omega)):
            raise ValueError("omega contains non-finite entries")
        object.__setattr__(self, "omega", omega)

    @property
    def n_features(self) -> int:
        return self.omega.shape[0]

    @property
    def input_dim(self) -> int:
        return self.omega.shape[1]


def sample_feature_weights(
    params: StudentTParams, input_dim: int, n_features: int, rng: RngState
) -> FeatureWeights:
    omega = sample_student_t(params, input_dim, n_features, rng)
    return FeatureWeights(omega=omega, params=params, seed=rng.seed)


def build_feature_matrix(weights: FeatureWeights, inputs: np.ndarray) -> np.ndarray:
    """Entrywise exp(i <omega_k, u_l>) for input rows u_l; shape (M, N).

    Every entry is unimodular by construction (cos + i sin of a real phase).
    """
    inputs = np.atleast_2d(np.asarray(inputs, dtype=float))
    if inputs.shape[1] != weights.input_dim:
        raise DimensionMismatchError(
            f"inputs have {inputs.shape[1]} columns, weights expect "
            f"{weights.input_dim}"
        )
    theta = inputs @ weights.omega.T
    return np.cos(theta) + 1j * np.sin(theta)


@dataclass(frozen=True)
class FeatureModel:
    """Trained expansion: coefficient column j realizes
    f_j(u) = sum_k c_kj exp(i <omega_k, u>), evaluated by its real part.

    Coefficients may be real (predictions are then even functions of the
    input, sums of cosines) or complex (general expansions)."""

    weights: FeatureWeights
    coefficients: np.ndarray  # (N, m), real or complex
    reg: "object" = None  # RegularizationSpec snapshot; opaque here
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        kind = complex if np.iscomplexobj(self.coefficients) else float
        coeff = np.asarray(self.coefficients, dtype=kind)
        if coeff.ndim != 2 or coeff.shape[0] != self.weights.n_features:
            raise ValueError(
                f"coefficients shape {coeff.shape} inconsistent with "
                f"{self.weights.n_features} features"
            )
        if not np.all(np.isfinite(coeff)):
            raise ValueError("coefficients contain non-finite entries")
        object.__setattr__(self, "coefficients", coeff)

    @property
    def input_dim(self) -> int:
        return self.weights.input_dim

    @property
    def output_dim(self) -> int:
        return self.coefficients.shape[1]


def predict(model: FeatureModel, inputs: np.ndarray) -> np.ndarray:
    """Evaluate the expansion at input rows; returns (M', m) real values."""
    a = build_feature_matrix(model.weights, inputs)
    return (a @ model.coefficients).real

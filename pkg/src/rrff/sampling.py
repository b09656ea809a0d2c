"""Seeded random sampling: Student's-t feature weights, periodic GP draws,
and relative noise injection."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

INF = math.inf


class ParameterError(ValueError):
    """Invalid distribution or sampler parameters."""


class DegenerateInputError(ValueError):
    """Input vector is degenerate for the requested operation."""


@dataclass(frozen=True)
class StudentTParams:
    """Feature-weight distribution: degrees of freedom nu (INF = Gaussian
    limit) and scale sigma."""

    nu: float
    sigma: float

    def __post_init__(self):
        if not (self.sigma > 0):
            raise ParameterError(f"sigma must be positive, got {self.sigma}")
        if not (self.nu > 0):
            raise ParameterError(f"nu must be positive or INF, got {self.nu}")

    @property
    def is_gaussian(self) -> bool:
        return math.isinf(self.nu)


@dataclass(frozen=True)
class GpSpec:
    """Stationary Gaussian field on the periodic interval or square.

    The covariance operator is amplitude^2 * (-Laplacian + shift*I)^(-power),
    realized spectrally on a uniform grid with `resolution` samples per axis.
    """

    mean: float = 0.0
    amplitude: float = 1.0
    shift: float = 9.0
    power: float = 2.0
    resolution: int = 128
    ndim: int = 1

    def __post_init__(self):
        if not (self.shift > 0):
            raise ParameterError(f"shift must be positive, got {self.shift}")
        if not (self.power >= 1):
            raise ParameterError(f"power must be >= 1, got {self.power}")
        if self.resolution < 2:
            raise ParameterError(f"resolution must be >= 2, got {self.resolution}")
        if self.ndim not in (1, 2):
            raise ParameterError(f"ndim must be 1 or 2, got {self.ndim}")


@dataclass(frozen=True)
class RngState:
    """Reproducible RNG handle: (seed, stream) pairs map to independent,
    bit-stable generators."""

    seed: int
    stream: int = 0

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream,))
        return np.random.default_rng(ss)

    def child(self, offset: int) -> "RngState":
        # Splitmix-style stream derivation; distinct offsets give distinct
        # streams so adding one consumer never perturbs another.
        mixed = (self.stream * 0x9E3779B97F4A7C15 + offset + 1) % 2**64
        return RngState(self.seed, mixed)


def sample_student_t(
    params: StudentTParams, d: int, n: int, rng: RngState
) -> np.ndarray:
    """Draw n i.i.d. weight vectors in R^d from the multivariate Student's-t
    distribution via the Gaussian / chi-squared scale mixture.

    nu = INF short-circuits to the tensor-product Gaussian sigma * z, using
    the same normal sub-draws, so the Gaussian limit is exact.
    """
    if d < 1 or n < 1:
        raise ParameterError(f"need d >= 1 and n >= 1, got d={d}, n={n}")
    g = rng.generator()
    z = g.standard_normal((n, d))
    if params.is_gaussian:
        return params.sigma * z
    s = g.chisquare(params.nu, size=(n, 1))
    return params.sigma * z * np.sqrt(params.nu / s)


def _spectral_multiplier(spec: GpSpec) -> np.ndarray:
    """Per-mode standard deviation of the Fourier coefficients: the square
    root of the covariance operator's eigenvalues ((2 pi k)^2 + shift)^-power."""
    r = spec.resolution
    k = np.fft.fftfreq(r, d=1.0 / r)
    if spec.ndim == 1:
        lam2 = (2.0 * np.pi * k) ** 2 + spec.shift
    else:
        k1, k2 = np.meshgrid(k, k, indexing="ij")
        lam2 = (2.0 * np.pi * k1) ** 2 + (2.0 * np.pi * k2) ** 2 + spec.shift
    return lam2 ** (-spec.power / 2.0)


def sample_gp_periodic(spec: GpSpec, rng: RngState) -> np.ndarray:
    """Draw one field on the uniform periodic grid {j/r} (1D) or its tensor
    square (2D).

    White noise on the grid is filtered spectrally, which realizes the
    stationary covariance exactly on the grid: the Fourier coefficient of
    mode k has variance amplitude^2 * ((2 pi k)^2 + shift)^(-power).
    """
    g = rng.generator()
    r = spec.resolution
    shape = (r,) if spec.ndim == 1 else (r, r)
    w = g.standard_normal(shape)
    filt = _spectral_multiplier(spec)
    field = np.fft.ifftn(np.fft.fftn(w) * filt)
    # fftn(w) has per-mode variance r^ndim; rescale so coefficient variance
    # matches the covariance eigenvalues.
    field = field * math.sqrt(r**spec.ndim)
    imag = float(np.max(np.abs(field.imag))) if field.size else 0.0
    if imag > 1e-10:
        raise RuntimeError(f"GP draw has imaginary residue {imag}")
    return spec.mean + spec.amplitude * field.real


def add_relative_noise(v: np.ndarray, p: float, rng: RngState) -> np.ndarray:
    """Return v + p * (||v|| / ||eps||) * eps with eps standard Gaussian, so
    the realized relative noise level is exactly p."""
    if not (0.0 <= p < 1.0):
        raise ParameterError(f"noise level must be in [0, 1), got {p}")
    v = np.asarray(v, dtype=float)
    if p == 0.0:
        return v.copy()
    nv = np.linalg.norm(v)
    if nv == 0.0:
        raise DegenerateInputError("cannot add relative noise to a zero vector")
    eps = rng.generator().standard_normal(v.shape)
    return v + p * (nv / np.linalg.norm(eps)) * eps


def add_relative_noise_rows(m: np.ndarray, p: float, rng: RngState) -> np.ndarray:
    """Row-wise relative noise: each row (one function sample) gets its own
    Gaussian perturbation normalized to relative level p."""
    if not (0.0 <= p < 1.0):
        raise ParameterError(f"noise level must be in [0, 1), got {p}")
    m = np.asarray(m, dtype=float)
    if p == 0.0:
        return m.copy()
    norms = np.linalg.norm(m, axis=1)
    if np.any(norms == 0.0):
        raise DegenerateInputError("cannot add relative noise to a zero row")
    eps = rng.generator().standard_normal(m.shape)
    scale = p * norms / np.linalg.norm(eps, axis=1)
    return m + scale[:, None] * eps

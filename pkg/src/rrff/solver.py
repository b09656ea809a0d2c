"""Frequency-weighted Tikhonov least squares for all output components,
sharing one Cholesky factorization across right-hand sides."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
from scipy.linalg import blas

from .features import FeatureWeights


class SingularSystemError(np.linalg.LinAlgError):
    """Gram matrix could not be factorized even after jitter retries."""


# Relative spectral cutoff separating signal from roundoff in the Gram
# matrix of an unregularized (minimum-norm) fit. The Gram eigenvalues of
# an underdetermined random-feature system span ~16 orders of magnitude;
# eigenvalues below this fraction of the largest one carry no information
# and inverting them amplifies noise.
MIN_NORM_RCOND = 5e-14


class DataError(ValueError):
    """Non-finite values in the training data or feature matrix."""


@dataclass(frozen=True)
class RegularizationSpec:
    """Penalty alpha * ||omega_k||^p on each coefficient magnitude squared.

    alpha = 0 is the unregularized baseline; p = 0 reduces to plain ridge.
    """

    alpha: float = 0.0
    p: float = 2.0

    def __post_init__(self):
        if self.alpha < 0:
            raise ValueError(f"alpha must be nonnegative, got {self.alpha}")
        if self.p < 0:
            raise ValueError(f"p must be nonnegative, got {self.p}")


@dataclass
class SolveReport:
    residual_norms: np.ndarray = field(default_factory=lambda: np.zeros(0))
    jitter: float = 0.0
    n_factorizations: int = 0
    wall_time: float = 0.0


def regularizer_diagonal(weights: FeatureWeights, reg: RegularizationSpec) -> np.ndarray:
    """d_k = alpha * ||omega_k||_2^p, with the 0^0 = 1 convention so that
    p = 0 penalizes every coefficient equally."""
    norms = np.linalg.norm(weights.omega, axis=1)
    if reg.p == 0.0:
        powered = np.ones_like(norms)
    else:
        powered = norms**reg.p
    return reg.alpha * powered


def _gram_lower(ar: np.ndarray, ai: np.ndarray) -> np.ndarray:
    """Re(A^H A) = Ar^T Ar + Ai^T Ai, lower triangle filled (syrk)."""
    g = blas.dsyrk(1.0, ar, trans=1, lower=1)
    g = blas.dsyrk(1.0, ai, trans=1, lower=1, beta=1.0, c=g, overwrite_c=1)
    return g


def gram_and_rhs(a: np.ndarray, targets: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Real normal-equation pieces for complex A and real targets:
    G = Re(A^H A) (lower triangle valid) and B = Re(A^H V) = Ar^T V."""
    targets = np.atleast_2d(np.asarray(targets, dtype=float))
    if targets.shape[0] != a.shape[0]:
        raise DataError(
            f"targets have {targets.shape[0]} rows, feature matrix has {a.shape[0]}"
        )
    if not np.all(np.isfinite(targets)):
        raise DataError("targets contain non-finite values")
    ar = np.ascontiguousarray(a.real)
    ai = np.ascontiguousarray(a.imag)
    if not (np.all(np.isfinite(ar)) and np.all(np.isfinite(ai))):
        raise DataError("feature matrix contains non-finite values")
    return _gram_lower(ar, ai), ar.T @ targets


def solve_regularized(
    g: np.ndarray,
    rhs: np.ndarray,
    d: np.ndarray,
    overwrite_g: bool = False,
    rebuild=None,
    max_retries: int = 6,
    apply=None,
) -> tuple[np.ndarray, SolveReport]:
    """Solve (G + diag(d)) X = rhs by one Cholesky factorization shared by
    all right-hand-side columns.

    On factorization failure, escalating diagonal jitter is applied:
    1e-10 * max|G_kk|, then x10 per retry, up to `max_retries` retries.
    When `overwrite_g` is set the failed factorization corrupts G, so a
    `rebuild` callable returning a fresh Gram matrix must be supplied for
    the retries (avoids holding two N x N copies for large N).

    `apply`, if given, evaluates x -> (G + diag(d)) x without the jitter;
    it enables iterative refinement that removes the jitter's ridge bias
    from the returned solution (important for the unregularized case,
    where the Gram matrix is often numerically singular).
    """
    report = SolveReport()
    t0 = time.perf_counter()
    n = g.shape[0]
    # jitter scale anchored to the diagonal (= M for unimodular features);
    # small enough not to perturb interpolation-regime solutions, escalated
    # geometrically when the factorization still fails
    base = max(float(np.max(np.abs(np.diag(g)))), 1.0)
    jitter = 0.0
    idx = np.arange(n)
    work = g if overwrite_g else g.copy()
    work[idx, idx] += d
    for attempt in range(max_retries + 1):
        try:
            c, low = sla.cho_factor(work, lower=True, overwrite_a=True)
            report.n_factorizations += 1
            x = sla.cho_solve((c, low), rhs)
            if jitter > 0.0 and apply is not None:
                x = _refine(x, rhs, (c, low), apply)
            report.jitter = jitter
            report.wall_time = time.perf_counter() - t0
            return x, report
        except np.linalg.LinAlgError:
            report.n_factorizations += 1
            if attempt == max_retries:
                break
            jitter = 1e-10 * base if jitter == 0.0 else 10.0 * jitter
            if overwrite_g:
                if rebuild is None:
                    raise SingularSystemError(
                        "factorization failed with overwrite_g and no rebuild"
                    )
                work = rebuild()
            else:
                work = g.copy()
            work[idx, idx] += d + jitter
    raise SingularSystemError(
        f"Cholesky failed after {max_retries} jitter retries (last jitter {jitter})"
    )


def _refine(x, rhs, factor, apply, max_iter: int = 25, tol: float = 1e-12):
    """Iterative refinement of a jittered factorization toward the
    unperturbed normal equations (removes the ridge bias of the jitter)."""
    scale = np.linalg.norm(rhs)
    best, best_norm = x, np.inf
    for _ in range(max_iter):
        r = rhs - apply(x)
        r_norm = np.linalg.norm(r)
        if r_norm < best_norm:
            best, best_norm = x, r_norm
        if r_norm <= tol * scale or r_norm > best_norm:
            break
        x = x + sla.cho_solve(factor, r)
    return best


def _pinv_solve(
    g: np.ndarray, rhs: np.ndarray, rcond: float
) -> tuple[np.ndarray, SolveReport]:
    """Pseudo-inverse solve of a Hermitian positive-semidefinite system by
    eigendecomposition, dropping eigenvalues below rcond * lambda_max."""
    report = SolveReport()
    t0 = time.perf_counter()
    lam, vec = sla.eigh(g)
    report.n_factorizations = 1
    top = lam[-1]
    if top <= 0.0:
        raise SingularSystemError("Gram matrix has no positive eigenvalues")
    inv = np.where(lam > rcond * top, 1.0, 0.0) / np.where(lam > 0.0, lam, 1.0)
    x = vec @ (inv[:, None] * (vec.conj().T @ rhs))
    report.wall_time = time.perf_counter() - t0
    return x, report


def fit_complex(
    a: np.ndarray,
    targets: np.ndarray,
    weights: FeatureWeights,
    reg: RegularizationSpec,
    strategy: str = "auto",
) -> tuple[np.ndarray, SolveReport]:
    """Minimize ||A x - v||^2 + sum_k d_k |x_k|^2 over complex x for each
    target column; predictions later take the real part of A x.

    Two equivalent routes solve the same problem:
    - "primal": (A^H A + diag(d)) x = A^H v, one N x N Hermitian Cholesky.
    - "dual": the push-through identity x = D^{-1} A^H (A D^{-1} A^H + I)^{-1} v
      needing only an M x M factorization; with alpha = 0 it degenerates to
      the minimum-norm least-squares solution x = A^H (A A^H)^+ v, computed
      through a spectral pseudo-inverse with the numerical-rank cutoff
      MIN_NORM_RCOND * lambda_max (the Gram matrix of a noisy
      underdetermined system is singular to machine precision, so directions
      below the cutoff are roundoff, not signal).
    "auto" picks the dual when the sample count is well below the feature
    count (where the primal Gram is singular or wastefully large) and the
    dual is applicable.
    """
    t0 = time.perf_counter()
    targets = np.atleast_2d(np.asarray(targets, dtype=float))
    if targets.shape[0] != a.shape[0]:
        raise DataError(
            f"targets have {targets.shape[0]} rows, feature matrix has {a.shape[0]}"
        )
    if not np.all(np.isfinite(targets)):
        raise DataError("targets contain non-finite values")
    d = regularizer_diagonal(weights, reg)
    m, n = a.shape
    dual_ok = m <= n and (reg.alpha == 0.0 or np.all(d > 0.0))
    if strategy == "auto":
        strategy = "dual" if dual_ok and 2 * m < n else "primal"
    if strategy == "dual" and not dual_ok:
        raise ValueError("dual strategy needs M <= N and a positive diagonal")
    if strategy == "dual":
        scaled = a if reg.alpha == 0.0 else a / d  # A D^{-1} column scale
        g = scaled @ a.conj().T
        rhs = targets.astype(complex)
        if reg.alpha > 0.0:
            idx = np.arange(m)
            g[idx, idx] += 1.0
            y, report = solve_regularized(g, rhs, np.zeros(m))
        else:
            y, report = _pinv_solve(g, rhs, rcond=MIN_NORM_RCOND)
        coeff = scaled.conj().T @ y
    elif strategy == "primal":
        g = a.conj().T @ a
        rhs = a.conj().T @ targets
        apply = lambda x: a.conj().T @ (a @ x) + d[:, None] * x  # noqa: E731
        coeff, report = solve_regularized(
            g, rhs, d, overwrite_g=True,
            rebuild=lambda: a.conj().T @ a, apply=apply,
        )
    else:
        raise ValueError(f"unknown strategy {strategy!r}")
    res = a @ coeff - targets
    report.residual_norms = np.linalg.norm(res, axis=0)
    report.wall_time = time.perf_counter() - t0
    return coeff, report


def fit_complex_sweep(
    a: np.ndarray,
    targets: np.ndarray,
    weights: FeatureWeights,
    alphas,
    p: float = 2.0,
) -> list[np.ndarray]:
    """Complex-coefficient fits for several positive alpha values at fixed p,
    sharing one M x M Gram matrix across the whole sweep.

    The dual system (A D^{-1} A^H + I) y = v with d_k = alpha * w_k,
    w_k = ||omega_k||^p, rearranges to (K + alpha I) y = alpha v where
    K = A diag(1/w) A^H does not depend on alpha, so each additional alpha
    costs only a Cholesky factorization instead of a fresh Gram product.
    Results match fit_complex(..., strategy="dual") for each alpha.
    """
    targets = np.atleast_2d(np.asarray(targets, dtype=float))
    if targets.shape[0] != a.shape[0]:
        raise DataError(
            f"targets have {targets.shape[0]} rows, feature matrix has {a.shape[0]}"
        )
    if not np.all(np.isfinite(targets)):
        raise DataError("targets contain non-finite values")
    alphas = [float(al) for al in alphas]
    if any(al <= 0.0 for al in alphas):
        raise ValueError("fit_complex_sweep needs strictly positive alphas")
    m, n = a.shape
    if m > n:
        raise ValueError("fit_complex_sweep needs M <= N (dual form)")
    w = regularizer_diagonal(weights, RegularizationSpec(1.0, p))
    if not np.all(w > 0.0):
        raise ValueError("fit_complex_sweep needs nonzero feature weights")
    scaled = a / w
    k = scaled @ a.conj().T
    out = []
    for alpha in alphas:
        g = k.copy()
        idx = np.arange(m)
        g[idx, idx] += alpha
        y, _ = solve_regularized(
            g, alpha * targets.astype(complex), np.zeros(m), overwrite_g=True,
            rebuild=lambda alpha=alpha: _shifted(k, alpha),
        )
        out.append((scaled.conj().T @ y) / alpha)
    return out


def _shifted(k: np.ndarray, alpha: float) -> np.ndarray:
    g = k.copy()
    idx = np.arange(k.shape[0])
    g[idx, idx] += alpha
    return g


def fit(
    a: np.ndarray,
    targets: np.ndarray,
    weights: FeatureWeights,
    reg: RegularizationSpec,
) -> tuple[np.ndarray, SolveReport]:
    """Minimize ||A x - v||^2 + sum_k d_k x_k^2 over real x for each target
    column, via the real normal equations (Re(A^H A) + diag(d)) x = Re(A^H v).

    With real x and real v, ||A x - v||^2 = ||Re(A) x - v||^2 + ||Im(A) x||^2,
    whose Gram matrix is Re(A^H A); the imaginary residual is part of the
    objective by the real-coefficient convention.
    """
    t0 = time.perf_counter()
    targets = np.atleast_2d(np.asarray(targets, dtype=float))
    g, rhs = gram_and_rhs(a, targets)
    d = regularizer_diagonal(weights, reg)
    ar = np.ascontiguousarray(a.real)
    ai = np.ascontiguousarray(a.imag)

    def rebuild():
        return _gram_lower(ar, ai)

    def apply(x):
        return ar.T @ (ar @ x) + ai.T @ (ai @ x) + d[:, None] * x

    coeff, report = solve_regularized(
        g, rhs, d, overwrite_g=True, rebuild=rebuild, apply=apply
    )
    res = a @ coeff - targets
    report.residual_norms = np.linalg.norm(res, axis=0)
    report.wall_time = time.perf_counter() - t0
    return coeff, report

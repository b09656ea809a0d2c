"""Empirical validation of the random-feature-matrix concentration bound:
characteristic function of the feature distribution, point separation, the
bound's side conditions, and the Monte Carlo concentration experiment."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq
from scipy.special import gammaln, kve

from .sampling import RngState, StudentTParams, sample_student_t

DEFAULT_BOUND_CONSTANT = 6.0  # sufficient in the proof for m >= 9


class ZeroSeparationError(ValueError):
    """Duplicate points: minimum pairwise separation is zero."""


class ConvergenceError(RuntimeError):
    """Iterative spectral-norm computation did not converge."""


def characteristic_fn(params: StudentTParams, t, method: str = "auto") -> float:
    """E[exp(i <omega, t>)] for the multivariate Student's-t weights; a
    Matern-type function of ||t|| only.

    Closed elementary forms exist for nu in {1, 3, INF}; other nu go through
    the modified Bessel function of the second kind. `method` forces a route:
    "closed" (nu in {1, 3, INF} only), "bessel", or "auto".
    """
    r = float(np.linalg.norm(np.atleast_1d(np.asarray(t, dtype=float))))
    if r == 0.0:
        return 1.0
    nu, sigma = params.nu, params.sigma
    if math.isinf(nu):
        if method == "bessel":
            raise ValueError("no Bessel route for the Gaussian limit")
        return math.exp(-0.5 * (sigma * r) ** 2)
    if method == "closed" or (method == "auto" and nu in (1.0, 3.0)):
        if nu == 1.0:
            return math.exp(-sigma * r)
        if nu == 3.0:
            x = sigma * math.sqrt(3.0) * r
            return (1.0 + x) * math.exp(-x)
        raise ValueError(f"no closed form for nu={nu}")
    x = sigma * math.sqrt(nu) * r
    half = nu / 2.0
    # phi = x^half / (2^(half-1) Gamma(half)) * K_half(x), evaluated in log
    # space to avoid under/overflow at large argument or large order.
    logk = _log_bessel_k(half, x)
    if logk == -math.inf:
        return 0.0
    logphi = (
        half * math.log(x) - (half - 1.0) * math.log(2.0) - gammaln(half) + logk
    )
    return float(min(math.exp(logphi), 1.0))


def _log_bessel_k(order: float, x: float) -> float:
    """log K_order(x) for positive order and argument."""
    k_scaled = kve(order, x)  # e^x K_order(x)
    if np.isfinite(k_scaled) and k_scaled > 0.0:
        return math.log(float(k_scaled)) - x
    # kve overflows when the order dwarfs the argument; fall back to the
    # integral representation K_a(x) = int_0^inf e^{-x cosh t} cosh(a t) dt,
    # integrated in log space around the Laplace point sinh t* = a / x.
    t_star = math.asinh(order / x)

    def log_integrand(t):
        log_cosh = order * t + math.log1p(math.exp(-2.0 * order * t)) - math.log(2.0)
        return -x * math.cosh(t) + log_cosh

    peak = log_integrand(t_star)
    g = lambda t: math.exp(log_integrand(t) - peak)  # noqa: E731
    # split at the peak so the quadrature resolves the narrow maximum
    left, _ = quad(g, 0.0, t_star, limit=200)
    right, _ = quad(g, t_star, math.inf, limit=200)
    return peak + math.log(left + right)


def min_separation(points) -> float:
    """Minimum pairwise Euclidean distance (exhaustive at desk scale)."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.shape[1] > pts.shape[0] and pts.shape[0] == 1:
        pts = pts.T
    if pts.shape[0] < 2:
        raise ValueError("need at least 2 points")
    diffs = pts[:, None, :] - pts[None, :, :]
    dist = np.sqrt((diffs**2).sum(-1))
    np.fill_diagonal(dist, np.inf)
    kappa = float(dist.min())
    if kappa == 0.0:
        raise ZeroSeparationError("duplicate points: zero separation")
    return kappa


@dataclass(frozen=True)
class TheoremConditions:
    eta: float
    n_min: int | None
    satisfiable: bool
    m_large_enough: bool  # the proof's constant requires m >= 9


def theorem_conditions(
    m: int,
    kappa: float,
    params: StudentTParams,
    delta: float,
    c: float = DEFAULT_BOUND_CONSTANT,
) -> TheoremConditions:
    """Evaluate the bound's two side conditions: eta = m * phi(kappa) from
    the separation condition and the minimal feature count
    N_min = ceil(c * eta^-2 * m * log(2m / delta))."""
    if kappa <= 0:
        raise ValueError(f"kappa must be positive, got {kappa}")
    if not (0 < delta < 1):
        raise ValueError(f"delta must be in (0, 1), got {delta}")
    eta = m * characteristic_fn(params, [kappa])
    if eta >= 1.0:
        return TheoremConditions(eta=eta, n_min=None, satisfiable=False,
                                 m_large_enough=m >= 9)
    n_min = math.ceil(c * eta**-2 * m * math.log(2.0 * m / delta))
    return TheoremConditions(eta=eta, n_min=n_min, satisfiable=True,
                             m_large_enough=m >= 9)


def separation_for_eta(params: StudentTParams, m: int, eta: float) -> float:
    """Smallest separation kappa with m * phi(kappa) = eta (phi is strictly
    decreasing in the separation)."""
    target = eta / m
    if not (0 < target < 1):
        raise ValueError("eta/m must be in (0, 1)")

    def f(r):
        return characteristic_fn(params, [r]) - target

    hi = 1.0
    while f(hi) > 0:
        hi *= 2.0
        if hi > 1e12:
            raise ConvergenceError("could not bracket the separation")
    return float(brentq(f, 1e-300, hi, xtol=1e-14, rtol=1e-12))


def separated_points(
    m: int, kappa: float, d: int, rng: RngState, slack: float = 0.2
) -> np.ndarray:
    """Jittered lattice with guaranteed minimum pairwise distance >= kappa.

    Lattice spacing (1 + slack) * kappa with per-coordinate jitter bounded
    by slack * kappa / 2 keeps every pair at least kappa apart by
    construction (not sample-and-hope).
    """
    if kappa <= 0:
        raise ValueError("kappa must be positive")
    g = rng.generator()
    spacing = (1.0 + slack) * kappa
    side = math.ceil(m ** (1.0 / d))
    grids = np.meshgrid(*[np.arange(side)] * d, indexing="ij")
    lattice = np.stack([a.ravel() for a in grids], axis=1)[:m] * spacing
    jitter = g.uniform(-slack * kappa / 2.0, slack * kappa / 2.0, size=(m, d))
    return lattice + jitter


def hermitian_spectral_norm(
    h: np.ndarray, tol: float = 1e-8, max_iter: int = 10_000, seed: int = 0
) -> float:
    """Largest absolute eigenvalue of a Hermitian matrix by power iteration.

    Indefinite matrices can carry near-opposite extreme eigenvalues, on which
    plain power iteration oscillates; iterating instead on the shifted
    positive-semidefinite matrices cI + H and cI - H (c >= ||H||_2 via the
    Frobenius bound) recovers both extremes unconditionally.
    """
    c = float(np.linalg.norm(h))
    if c == 0.0:
        return 0.0
    extremes = []
    for sign in (1.0, -1.0):
        g = np.random.default_rng(seed)
        v = g.standard_normal(h.shape[0]) + 1j * g.standard_normal(h.shape[0])
        v /= np.linalg.norm(v)
        for _ in range(max_iter):
            w = c * v + sign * (h @ v)
            lam = np.vdot(v, w).real  # Rayleigh quotient, in [0, 2c]
            # for Hermitian matrices the eigenvalue error is bounded by the
            # residual norm, so this is a certified stopping criterion
            if np.linalg.norm(w - lam * v) <= tol * c:
                break
            nw = np.linalg.norm(w)
            if nw == 0.0:
                lam = 0.0
                break
            v = w / nw
        else:
            raise ConvergenceError(
                f"power iteration did not converge in {max_iter} steps"
            )
        extremes.append(lam - c)  # sign * (extreme eigenvalue of H)
    return max(extremes[0], extremes[1], 0.0)


@dataclass
class ConcentrationReport:
    m: int
    n: int
    nu: float
    sigma: float
    kappa: float
    eta: float
    trials: int
    deviations: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def failure_fraction(self) -> float:
        """Fraction of trials where ||(1/N) A A* - I||_2 exceeds 2 eta."""
        return float(np.mean(self.deviations > 2.0 * self.eta))


def concentration_experiment(
    m: int,
    n: int,
    params: StudentTParams,
    kappa: float,
    trials: int,
    rng: RngState,
    d: int = 1,
    eta: float | None = None,
) -> ConcentrationReport:
    """Per trial: sample weights and kappa-separated points, build the m x N
    feature matrix, and record the spectral deviation ||(1/N) A A* - I||_2."""
    if not (n >= m >= 1):
        raise ValueError(f"need N >= m >= 1, got m={m}, N={n}")
    if eta is None:
        eta = m * characteristic_fn(params, [kappa])
    devs = np.empty(trials)
    for t in range(trials):
        trial_rng = rng.child(t)
        pts = separated_points(m, kappa, d, trial_rng.child(1))
        omega = sample_student_t(params, d, n, trial_rng.child(2))
        theta = pts @ omega.T
        a = np.cos(theta) + 1j * np.sin(theta)
        dev = (a @ a.conj().T) / n - np.eye(m)
        devs[t] = hermitian_spectral_norm(dev, seed=t)
    return ConcentrationReport(
        m=m, n=n, nu=params.nu, sigma=params.sigma, kappa=kappa,
        eta=float(eta), trials=trials, deviations=devs,
    )

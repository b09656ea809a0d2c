import numpy as np
import pytest

from rrff.features import FeatureWeights, build_feature_matrix, sample_feature_weights
from rrff.sampling import INF, RngState, StudentTParams
from rrff.solver import (
    DataError,
    RegularizationSpec,
    fit,
    fit_complex,
    fit_complex_sweep,
    gram_and_rhs,
    regularizer_diagonal,
    solve_regularized,
)

PARAMS = StudentTParams(INF, 1.0)


def stacked_lstsq_oracle(a, targets, d):
    """Independent reference: minimize ||A x - v||^2 + sum d_k x_k^2 over real
    x via orthogonal factorization of the stacked real system
    [Re A; Im A; diag(sqrt(d))] with targets [v; 0; 0]."""
    targets = np.atleast_2d(targets)
    n = a.shape[1]
    stacked = np.vstack([a.real, a.imag, np.diag(np.sqrt(d))])
    rhs = np.vstack([targets, np.zeros((a.shape[0], targets.shape[1])),
                     np.zeros((n, targets.shape[1]))])
    sol, *_ = np.linalg.lstsq(stacked, rhs, rcond=None)
    return sol


def random_instance(seed, m, n):
    g = RngState(seed).generator()
    inputs = g.standard_normal((m, 4))
    targets = g.standard_normal((m, 3))
    w = sample_feature_weights(PARAMS, 4, n, RngState(seed + 1))
    a = build_feature_matrix(w, inputs)
    return a, targets, w


class TestRegularizerDiagonal:
    def test_hand_value(self):
        w = FeatureWeights(omega=np.array([[3.0, 4.0]]), params=PARAMS)
        d = regularizer_diagonal(w, RegularizationSpec(0.1, 2.0))
        np.testing.assert_allclose(d, [2.5])

    def test_alpha_zero(self):
        w = FeatureWeights(omega=np.ones((4, 2)), params=PARAMS)
        np.testing.assert_array_equal(
            regularizer_diagonal(w, RegularizationSpec(0.0, 2.0)), np.zeros(4)
        )

    def test_zero_frequency_unpenalized(self):
        w = FeatureWeights(omega=np.zeros((1, 3)), params=PARAMS)
        d = regularizer_diagonal(w, RegularizationSpec(0.5, 2.0))
        np.testing.assert_array_equal(d, [0.0])

    def test_p_zero_is_plain_ridge(self):
        # 0^0 = 1 convention: even zero frequencies get the ridge penalty
        w = FeatureWeights(omega=np.vstack([np.zeros(2), np.ones(2)]),
                           params=PARAMS)
        d = regularizer_diagonal(w, RegularizationSpec(0.3, 0.0))
        np.testing.assert_allclose(d, [0.3, 0.3])

    def test_invalid_spec(self):
        with pytest.raises(ValueError):
            RegularizationSpec(-0.1, 2.0)
        with pytest.raises(ValueError):
            RegularizationSpec(0.1, -2.0)


class TestFit:
    def test_matches_stacked_oracle(self):
        a, targets, w = random_instance(10, 15, 30)
        reg = RegularizationSpec(0.01, 2.0)
        coeff, _ = fit(a, targets, w, reg)
        oracle = stacked_lstsq_oracle(a, targets, regularizer_diagonal(w, reg))
        rel = np.linalg.norm(coeff - oracle) / np.linalg.norm(oracle)
        assert rel < 1e-8

    def test_large_alpha_shrinks_coefficients(self):
        a, targets, w = random_instance(11, 20, 25)
        coeff, _ = fit(a, targets, w, RegularizationSpec(1e6, 2.0))
        assert np.linalg.norm(coeff) < 1e-3

    def test_overparameterized_interpolation(self):
        a, targets, w = random_instance(12, 20, 200)
        coeff, report = fit(a, targets, w, RegularizationSpec(0.0, 2.0))
        rel = np.linalg.norm((a @ coeff).real - targets) / np.linalg.norm(targets)
        assert rel < 1e-6
        np.testing.assert_allclose(
            report.residual_norms,
            np.linalg.norm(a @ coeff - targets, axis=0),
            rtol=1e-10,
        )

    def test_normal_equation_residuals(self):
        a, targets, w = random_instance(13, 25, 40)
        reg = RegularizationSpec(0.05, 2.0)
        coeff, _ = fit(a, targets, w, reg)
        g, rhs = gram_and_rhs(a, targets)
        d = regularizer_diagonal(w, reg)
        full = np.tril(g) + np.tril(g, -1).T + np.diag(d)
        lhs = full @ coeff
        for j in range(targets.shape[1]):
            gap = np.linalg.norm(lhs[:, j] - rhs[:, j])
            assert gap <= 1e-8 * np.linalg.norm(rhs[:, j])

    def test_residual_monotone_in_alpha(self):
        a, targets, w = random_instance(14, 30, 40)
        norms = []
        for alpha in (0.0, 1e-4, 1e-2, 1.0, 1e2):
            coeff, _ = fit(a, targets, w, RegularizationSpec(alpha, 2.0))
            norms.append(np.linalg.norm(a @ coeff - targets))
        assert all(n2 >= n1 - 1e-12 for n1, n2 in zip(norms, norms[1:]))

    def test_deterministic(self):
        a, targets, w = random_instance(15, 18, 22)
        c1, _ = fit(a, targets, w, RegularizationSpec(0.01, 2.0))
        c2, _ = fit(a, targets, w, RegularizationSpec(0.01, 2.0))
        np.testing.assert_array_equal(c1, c2)

    def test_nan_targets_rejected(self):
        a, targets, w = random_instance(16, 10, 12)
        targets[3, 1] = np.nan
        with pytest.raises(DataError):
            fit(a, targets, w, RegularizationSpec(0.01, 2.0))

    def test_row_mismatch_rejected(self):
        a, targets, w = random_instance(17, 10, 12)
        with pytest.raises(DataError):
            fit(a, targets[:-1], w, RegularizationSpec(0.01, 2.0))

    def test_jitter_recorded_on_singular_gram(self):
        # duplicate features make the unregularized Gram exactly singular
        g = RngState(18).generator()
        omega = g.standard_normal((1, 2))
        w = FeatureWeights(omega=np.vstack([omega, omega, omega]), params=PARAMS)
        a = build_feature_matrix(w, g.standard_normal((5, 2)))
        coeff, report = fit(a, g.standard_normal((5, 1)), w,
                            RegularizationSpec(0.0, 2.0))
        assert report.jitter > 0.0
        assert report.n_factorizations > 1
        assert np.all(np.isfinite(coeff))


def complex_stacked_oracle(a, targets, d):
    """Independent reference for the complex-coefficient problem: minimize
    ||A x - v||^2 + sum d_k |x_k|^2 over complex x via orthogonal
    factorization of [A; diag(sqrt(d))] with targets [v; 0]."""
    targets = np.atleast_2d(targets)
    n = a.shape[1]
    stacked = np.vstack([a, np.diag(np.sqrt(d)).astype(complex)])
    rhs = np.vstack([targets.astype(complex), np.zeros((n, targets.shape[1]))])
    sol, *_ = np.linalg.lstsq(stacked, rhs, rcond=None)
    return sol


class TestFitComplex:
    @pytest.mark.parametrize("strategy", ["primal", "dual"])
    def test_matches_complex_oracle(self, strategy):
        a, targets, w = random_instance(20, 15, 40)
        reg = RegularizationSpec(0.01, 2.0)
        coeff, _ = fit_complex(a, targets, w, reg, strategy=strategy)
        oracle = complex_stacked_oracle(a, targets, regularizer_diagonal(w, reg))
        rel = np.linalg.norm(coeff - oracle) / np.linalg.norm(oracle)
        assert rel < 1e-8

    def test_primal_dual_agree(self):
        a, targets, w = random_instance(21, 12, 30)
        reg = RegularizationSpec(0.05, 2.0)
        cp, _ = fit_complex(a, targets, w, reg, strategy="primal")
        cd, _ = fit_complex(a, targets, w, reg, strategy="dual")
        assert np.linalg.norm(cp - cd) < 1e-8 * np.linalg.norm(cp)

    def test_alpha_zero_min_norm_matches_lstsq(self):
        a, targets, w = random_instance(22, 10, 40)
        coeff, _ = fit_complex(a, targets, w, RegularizationSpec(0.0, 2.0),
                               strategy="dual")
        oracle, *_ = np.linalg.lstsq(a, targets.astype(complex), rcond=None)
        rel = np.linalg.norm(coeff - oracle) / np.linalg.norm(oracle)
        assert rel < 1e-8

    def test_alpha_zero_interpolates(self):
        a, targets, w = random_instance(23, 10, 40)
        coeff, report = fit_complex(a, targets, w, RegularizationSpec(0.0, 2.0))
        res = a @ coeff - targets
        assert np.linalg.norm(res) < 1e-8 * np.linalg.norm(targets)
        np.testing.assert_allclose(
            report.residual_norms, np.linalg.norm(res, axis=0), atol=1e-10
        )

    def test_auto_picks_dual_when_underdetermined(self):
        a, targets, w = random_instance(24, 10, 40)
        cauto, _ = fit_complex(a, targets, w, RegularizationSpec(0.01, 2.0))
        cdual, _ = fit_complex(a, targets, w, RegularizationSpec(0.01, 2.0),
                               strategy="dual")
        np.testing.assert_array_equal(cauto, cdual)

    def test_dual_rejected_when_overdetermined(self):
        a, targets, w = random_instance(25, 30, 10)
        with pytest.raises(ValueError):
            fit_complex(a, targets, w, RegularizationSpec(0.01, 2.0),
                        strategy="dual")

    def test_unknown_strategy_rejected(self):
        a, targets, w = random_instance(26, 10, 20)
        with pytest.raises(ValueError):
            fit_complex(a, targets, w, RegularizationSpec(0.01, 2.0),
                        strategy="qr")

    def test_nan_targets_rejected(self):
        a, targets, w = random_instance(27, 10, 20)
        targets[2, 0] = np.nan
        with pytest.raises(DataError):
            fit_complex(a, targets, w, RegularizationSpec(0.01, 2.0))

    def test_complex_beats_real_on_odd_map(self):
        # predictions with real coefficients are even functions of the input
        # (sums of cosines). On a training set closed under negation with an
        # odd target map, the best even fit at a +/-u pair is the value 0,
        # so its residual can never drop below the target norm; complex
        # coefficients fit the same data essentially exactly.
        g = RngState(28).generator()
        half = g.standard_normal((30, 6))
        inputs = np.vstack([half, -half])
        targets = inputs.mean(axis=1, keepdims=True)  # odd in the input
        w = sample_feature_weights(PARAMS, 6, 400, RngState(29))
        a = build_feature_matrix(w, inputs)
        reg = RegularizationSpec(1e-8, 2.0)
        cr, _ = fit(a, targets, w, reg)
        cc, _ = fit_complex(a, targets, w, reg)
        scale = np.linalg.norm(targets)
        assert np.linalg.norm((a @ cc).real - targets) < 1e-6 * scale
        assert np.linalg.norm((a @ cr).real - targets) > 0.99 * scale
        # evenness is structural: the real model predicts identical values
        # at u and -u no matter the data
        a_neg = build_feature_matrix(w, -inputs)
        np.testing.assert_allclose((a_neg @ cr).real, (a @ cr).real,
                                   atol=1e-10)


class TestFitComplexSweep:
    def test_matches_per_alpha_fits(self):
        a, targets, w = random_instance(30, 12, 36)
        alphas = [1e-4, 1e-2, 1.0, 10.0]
        sweep = fit_complex_sweep(a, targets, w, alphas, p=2.0)
        for alpha, cs in zip(alphas, sweep):
            cd, _ = fit_complex(a, targets, w, RegularizationSpec(alpha, 2.0),
                                strategy="dual")
            assert np.linalg.norm(cs - cd) < 1e-10 * np.linalg.norm(cd)

    def test_nonpositive_alpha_rejected(self):
        a, targets, w = random_instance(31, 10, 20)
        with pytest.raises(ValueError):
            fit_complex_sweep(a, targets, w, [0.1, 0.0], p=2.0)

    def test_zero_frequency_rejected(self):
        g = RngState(32).generator()
        w = FeatureWeights(omega=np.vstack([np.zeros(3),
                                            g.standard_normal((9, 3))]),
                           params=PARAMS)
        a = build_feature_matrix(w, g.standard_normal((5, 3)))
        with pytest.raises(ValueError):
            fit_complex_sweep(a, g.standard_normal((5, 1)), w, [0.1], p=2.0)


class TestSolveRegularized:
    def test_explicit_system(self):
        g = np.array([[4.0, 0.0], [1.0, 3.0]])  # lower triangle valid
        rhs = np.array([[1.0], [2.0]])
        d = np.array([1.0, 1.0])
        x, report = solve_regularized(g, rhs, d)
        full = np.array([[5.0, 1.0], [1.0, 4.0]])
        np.testing.assert_allclose(full @ x, rhs, atol=1e-12)
        assert report.n_factorizations == 1
        assert report.jitter == 0.0

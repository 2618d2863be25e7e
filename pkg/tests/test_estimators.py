import numpy as np
import pytest

from lrquant.estimators import (
    dilation,
    minsker_cross_moment,
    psd_floor,
    sample_cov,
    sigma_xx_tilde,
    sigma_xy_tilde,
)
from lrquant.matops import matrix_norm
from lrquant.preprocess import gen_dither, quantize_uniform


class TestSigmaXxTilde:
    def test_eta_zero_is_plain_second_moment(self):
        rng = np.random.default_rng(0)
        X = rng.standard_normal((50, 4))
        S = sigma_xx_tilde(X, 0.0)
        expected = X.T @ X / 50
        assert np.allclose(S, expected, atol=1e-12)
        assert np.allclose(S, S.T)

    def test_correction_subtracts_quarter_eta_sq_identity(self):
        rng = np.random.default_rng(1)
        X = rng.standard_normal((50, 4))
        eta = 0.6
        S0 = sigma_xx_tilde(X, 0.0)
        S = sigma_xx_tilde(X, eta)
        assert np.allclose(S0 - S, (eta**2 / 4) * np.eye(4), atol=1e-12)

    def test_dither_correction_unbiased_monte_carlo(self):
        # averaging over fresh triangular dither + quantization draws, the
        # quantized second moment recovers the clean one plus (eta^2/4) I
        rng = np.random.default_rng(2)
        n, d, eta, reps = 32, 6, 0.4, 20000
        Xs = rng.standard_normal((n, d))
        clean = sigma_xx_tilde(Xs, 0.0)
        draws = np.empty((reps, d, d))
        for r in range(reps):
            dith = gen_dither(n * d, eta, "triangular", rng).reshape(n, d)
            Xq = quantize_uniform(Xs, eta, dith)
            draws[r] = Xq.T @ Xq / n
        mean = draws.mean(axis=0)
        se = draws.std(axis=0, ddof=1) / np.sqrt(reps)
        dev = np.abs(mean - (clean + eta**2 / 4 * np.eye(d)))
        assert np.all(dev <= 3.5 * se + 1e-12)

    def test_gaussian_consistency(self):
        rng = np.random.default_rng(3)
        n, d, eta = 10**5, 10, 0.2
        X = rng.standard_normal((n, d))
        dith = gen_dither(n * d, eta, "triangular", rng).reshape(n, d)
        Xq = quantize_uniform(X, eta, dith)
        S = sigma_xx_tilde(Xq, eta)
        assert matrix_norm(S - np.eye(d), "op") <= 0.1

    def test_error_shrinks_like_root_n(self):
        # operator-norm error ratio across 10x sample growth ~ sqrt(10)
        for eta in (0.0, 0.4):
            errs = []
            for i_n, n in enumerate((10**3, 10**4, 10**5)):
                vals = []
                for rep in range(2):
                    rng = np.random.default_rng(100 + 10 * i_n + rep)
                    X = rng.standard_normal((n, 10))
                    if eta > 0:
                        dith = gen_dither(n * 10, eta, "triangular", rng).reshape(n, 10)
                        X = quantize_uniform(X, eta, dith)
                    vals.append(matrix_norm(sigma_xx_tilde(X, eta) - np.eye(10), "op"))
                errs.append(np.mean(vals))
            for a, b in zip(errs, errs[1:]):
                assert 0.6 * np.sqrt(10) <= a / b <= 1.4 * np.sqrt(10)

    def test_empty_sample(self):
        with pytest.raises(ValueError):
            sigma_xx_tilde(np.empty((0, 3)), 0.0)

    def test_permutation_and_repeat_stability(self):
        rng = np.random.default_rng(4)
        X = rng.standard_normal((5000, 6)) * rng.uniform(0.5, 2, size=(5000, 1))
        S1 = sigma_xx_tilde(X, 0.3)
        S2 = sigma_xx_tilde(X, 0.3)
        assert np.array_equal(S1, S2)
        perm = rng.permutation(5000)
        S3 = sigma_xx_tilde(X[perm], 0.3)
        assert np.max(np.abs(S3 - S1)) <= 1e-13 * max(1.0, np.max(np.abs(S1)))


class TestSigmaXyTilde:
    def test_single_outer_product(self):
        S = sigma_xy_tilde([[1.0, 0.0]], [[2.0, 3.0]])
        assert np.allclose(S, [[2.0, 3.0], [0.0, 0.0]])

    def test_definitional_identity_with_sigma_xx(self):
        rng = np.random.default_rng(5)
        X = rng.standard_normal((40, 3))
        eta = 0.5
        assert np.allclose(
            sigma_xy_tilde(X, X),
            sigma_xx_tilde(X, eta) + eta**2 / 4 * np.eye(3),
            atol=1e-12,
        )

    def test_population_identity_under_regression_model(self):
        rng = np.random.default_rng(6)
        n, d1, d2 = 10**5, 8, 5
        theta = rng.standard_normal((d1, d2)) / np.sqrt(d1)
        X = rng.standard_normal((n, d1))
        Y = X @ theta + 0.1 * rng.standard_normal((n, d2))
        # Sigma_XX = I, so Sigma_XY = theta
        assert matrix_norm(sigma_xy_tilde(X, Y) - theta, "op") <= 0.1

    def test_sample_count_mismatch(self):
        with pytest.raises(ValueError):
            sigma_xy_tilde(np.ones((3, 2)), np.ones((4, 2)))


class TestSampleCov:
    def test_single_sample(self):
        assert np.allclose(sample_cov([[1.0, 2.0]]), [[1.0, 2.0], [2.0, 4.0]])

    def test_gaussian_consistency(self):
        rng = np.random.default_rng(7)
        X = rng.standard_normal((10**5, 4))
        assert matrix_norm(sample_cov(X) - np.eye(4), "op") <= 0.05

    def test_always_psd(self):
        rng = np.random.default_rng(8)
        for _ in range(20):
            X = rng.standard_t(2.5, size=(rng.integers(1, 30), 5))
            w = np.linalg.eigvalsh(sample_cov(X))
            assert w[0] >= -1e-12


class TestDilation:
    def test_one_by_one(self):
        D = dilation([[2.0]])
        assert np.allclose(D, [[0.0, 2.0], [2.0, 0.0]])
        assert np.allclose(np.linalg.eigvalsh(D), [-2.0, 2.0])

    def test_zero(self):
        assert np.allclose(dilation(np.zeros((2, 3))), np.zeros((5, 5)))

    def test_spectrum_mirrors_singular_values(self):
        rng = np.random.default_rng(9)
        B = rng.standard_normal((3, 2))
        s = np.linalg.svd(B, compute_uv=False)
        w = np.linalg.eigvalsh(dilation(B))
        expected = np.sort(np.concatenate([s, -s, [0.0]]))
        assert np.allclose(np.sort(w), expected, atol=1e-8)
        assert matrix_norm(dilation(B), "op") == pytest.approx(s[0], rel=1e-10)


class TestMinskerCrossMoment:
    def test_rank_one_clip(self):
        out = minsker_cross_moment([1.0], [[[2.0]]], 1.0)
        assert out.shape == (1, 1)
        assert out[0, 0] == pytest.approx(1.0, abs=1e-12)

    def test_no_clipping_regime_equals_plain_average(self):
        rng = np.random.default_rng(10)
        n, d1, d2 = 20, 4, 3
        x = rng.standard_normal(n)
        Ys = rng.standard_normal((n, d1, d2))
        tau = max(abs(x[i]) * matrix_norm(Ys[i], "op") for i in range(n)) + 1.0
        plain = np.einsum("i,ipq->pq", x, Ys) / n
        out = minsker_cross_moment(x, Ys, tau)
        assert np.allclose(out, plain, atol=1e-10)

    def test_outlier_is_tamed(self):
        rng = np.random.default_rng(11)
        n, d1, d2 = 50, 4, 3
        x = rng.standard_normal(n)
        Ys = rng.standard_normal((n, d1, d2))
        Ys[7] *= 1e6
        tau = 5.0
        plain = np.einsum("i,ipq->pq", x, Ys) / n
        out = minsker_cross_moment(x, Ys, tau)
        assert matrix_norm(plain, "op") > 100.0
        assert matrix_norm(out, "op") <= tau + 1e-9

    def test_operator_norm_never_exceeds_tau(self):
        rng = np.random.default_rng(12)
        for _ in range(100):
            n = int(rng.integers(1, 12))
            d1, d2 = int(rng.integers(1, 5)), int(rng.integers(1, 5))
            x = rng.standard_t(2.1, size=n) * 10
            Ys = rng.standard_t(2.1, size=(n, d1, d2)) * 10
            tau = float(rng.uniform(0.01, 20.0))
            out = minsker_cross_moment(x, Ys, tau)
            assert matrix_norm(out, "op") <= tau * (1 + 1e-10)

    def test_bad_args(self):
        with pytest.raises(ValueError):
            minsker_cross_moment([1.0], [[[1.0]]], 0.0)
        with pytest.raises(ValueError):
            minsker_cross_moment([1.0, 2.0], [[[1.0]]], 1.0)


class TestPsdFloor:
    def test_clips_negative_eigenvalue(self):
        out = psd_floor(np.diag([2.0, -1.0]), 0.0)
        assert np.allclose(out, np.diag([2.0, 0.0]), atol=1e-12)

    def test_psd_input_untouched(self):
        rng = np.random.default_rng(13)
        A = rng.standard_normal((4, 4))
        S = A @ A.T
        assert np.allclose(psd_floor(S, 0.0), S, atol=1e-12)

    def test_floor_enforced_and_idempotent(self):
        rng = np.random.default_rng(14)
        for _ in range(20):
            A = rng.standard_normal((5, 5))
            S = 0.5 * (A + A.T)
            floor = float(rng.uniform(0.0, 0.5))
            out = psd_floor(S, floor)
            assert np.linalg.eigvalsh(out)[0] >= floor - 1e-10
            assert np.allclose(psd_floor(out, floor), out, atol=1e-10)

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from probrecon.covariance import (
    CovarianceModel,
    KhMode,
    ResidualMatrix,
    assemble_w1,
    partition_w1,
    sample_covariance,
    scale_kh,
    shrinkage_covariance,
    shrinkage_intensity,
)
from probrecon.errors import NumericalError, ValidationError
from probrecon.hierarchy import aggregate_bottom


def brute_cov(X):
    N, m = X.shape
    mean = [sum(X[t, j] for t in range(N)) / N for j in range(m)]
    C = np.zeros((m, m))
    for i in range(m):
        for j in range(m):
            C[i, j] = sum((X[t, i] - mean[i]) * (X[t, j] - mean[j]) for t in range(N)) / (N - 1)
    return C


def brute_lambda(X):
    """Schafer-Strimmer diagonal-target intensity, written out with loops."""
    N, m = X.shape
    Xc = X - X.mean(axis=0)
    sd = np.sqrt((Xc**2).sum(axis=0) / (N - 1))
    Z = Xc / sd
    num = den = 0.0
    for i in range(m):
        for j in range(m):
            if i == j:
                continue
            w = Z[:, i] * Z[:, j]
            wbar = w.mean()
            num += N / (N - 1) ** 3 * np.sum((w - wbar) ** 2)
            den += (N / (N - 1) * wbar) ** 2
    return min(1.0, max(0.0, num / den))


def test_sample_covariance_hand_cases():
    np.testing.assert_array_equal(sample_covariance(np.array([[1.0, 2], [3, 4]])), [[2, 2], [2, 2]])
    np.testing.assert_array_equal(sample_covariance(np.ones((5, 3)) * 7), np.zeros((3, 3)))
    C = sample_covariance(np.array([[1.0, 0], [-1, 0], [0, 1], [0, -1]]))
    np.testing.assert_allclose(C, [[2 / 3, 0], [0, 2 / 3]], rtol=0, atol=1e-15)


def test_sample_covariance_matches_double_loop():
    X = np.random.default_rng(3).normal(size=(40, 5)) * [1, 2, 3, 0.5, 10] + 4
    np.testing.assert_allclose(sample_covariance(X), brute_cov(X), rtol=1e-12, atol=0)


@pytest.mark.parametrize("X", [np.ones((1, 3)), np.array([[1.0, np.nan], [2.0, 3.0]])])
def test_sample_covariance_errors(X):
    with pytest.raises(ValidationError):
        sample_covariance(X)


def test_residual_matrix_needs_two_rows():
    with pytest.raises(ValidationError):
        ResidualMatrix(np.ones((1, 2)), ("a", "b"))


def test_shrinkage_single_series():
    X = np.random.default_rng(0).normal(size=(30, 1)) * 3
    W, lam = shrinkage_covariance(X)
    np.testing.assert_array_equal(W, sample_covariance(X))
    assert 0.0 <= lam <= 1.0


def test_lambda_matches_loop_oracle():
    rng = np.random.default_rng(11)
    for _ in range(20):
        N, m = int(rng.integers(5, 60)), int(rng.integers(2, 7))
        L = rng.normal(size=(m, m))
        X = rng.normal(size=(N, m)) @ L.T
        assert shrinkage_intensity(X) == pytest.approx(brute_lambda(X), rel=1e-10, abs=1e-14)


def test_independent_noise_is_shrunk():
    lams = []
    off = ~np.eye(5, dtype=bool)
    for seed in range(20):
        X = np.random.default_rng(seed).normal(size=(500, 5))
        S = sample_covariance(X)
        W, lam = shrinkage_covariance(X)
        assert lam == pytest.approx(brute_lambda(X), rel=1e-10)
        assert np.all(np.abs(W[off]) <= np.abs(S[off]))
        np.testing.assert_array_equal(np.diag(W), np.diag(S))
        lams.append(lam)
    # the estimate is noisy per draw but concentrates near full shrinkage
    assert np.mean(lams) > 0.85
    assert np.median(lams) == 1.0


def test_perfect_correlation_not_shrunk():
    x = np.random.default_rng(5).normal(size=100)
    X = np.column_stack([x, 2 * x + 1])
    W, lam = shrinkage_covariance(X, jitter=1e-8)
    assert lam == pytest.approx(brute_lambda(X), rel=1e-10)
    assert lam < 0.05
    S = sample_covariance(X)
    assert W[0, 1] == pytest.approx((1 - lam) * S[0, 1], rel=1e-12)
    assert abs(W[0, 1] - S[0, 1]) < 0.05 * abs(S[0, 1])


def test_forced_endpoints():
    X = np.random.default_rng(9).normal(size=(50, 4)) @ np.random.default_rng(1).normal(size=(4, 4))
    S = sample_covariance(X)
    W1, _ = shrinkage_covariance(X, lam=1.0)
    np.testing.assert_array_equal(W1, np.diag(np.diag(S)))
    W0, _ = shrinkage_covariance(X, lam=0.0)
    np.testing.assert_array_equal(W0, S)
    with pytest.raises(ValidationError):
        shrinkage_covariance(X, lam=1.5)


def test_zero_variance_column_needs_jitter():
    rng = np.random.default_rng(4)
    X = np.column_stack([rng.normal(size=20), np.full(20, 3.0)])
    W, lam = shrinkage_covariance(X, jitter=1e-8)
    np.linalg.cholesky(W)
    ridge = 1e-8 * np.mean(np.diag(sample_covariance(X)))
    assert W[1, 1] == pytest.approx(ridge, rel=1e-12)
    with pytest.raises(NumericalError):
        shrinkage_covariance(X, jitter=0.0)


@settings(max_examples=60, deadline=None)
@given(
    X=arrays(
        np.float64,
        st.tuples(st.integers(2, 30), st.integers(1, 6)),
        elements=st.floats(-1e3, 1e3, allow_subnormal=False),
    )
)
def test_shrinkage_properties(X):
    if np.all(np.var(X, axis=0) == 0):
        return
    # shrinkage retries once with jitter, only fail on genuine degeneracy
    W, lam = shrinkage_covariance(X, jitter=1e-6)
    assert 0.0 <= lam <= 1.0
    assert np.array_equal(W, W.T)
    np.linalg.cholesky(W)


def test_partition_identity():
    cov = partition_w1(np.eye(3), 3, 2)
    np.testing.assert_array_equal(cov.Sigma_u1, [[1.0]])
    np.testing.assert_array_equal(cov.Sigma_b1, np.eye(2))
    np.testing.assert_array_equal(cov.M1, [[0.0], [0.0]])


def test_partition_sign_flip():
    W = np.array([[4.0, 1, 2], [1, 3, 0], [2, 0, 5]])
    cov = partition_w1(W, 3, 2)
    np.testing.assert_array_equal(cov.Sigma_u1, [[4.0]])
    np.testing.assert_array_equal(cov.Sigma_b1, [[3.0, 0], [0, 5]])
    np.testing.assert_array_equal(cov.M1, [[-1.0], [-2.0]])


def test_partition_errors():
    with pytest.raises(ValidationError):
        partition_w1(np.array([[1.0, 0.5], [0.4, 1.0]]), 2, 1)
    with pytest.raises(NumericalError):
        partition_w1(np.array([[1.0, 0], [0, -1.0]]), 2, 1)


def test_partition_reassembly_bit_exact():
    rng = np.random.default_rng(8)
    for _ in range(20):
        m = int(rng.integers(2, 9))
        n = int(rng.integers(1, m + 1))
        X = rng.normal(size=(40, m)) @ rng.normal(size=(m, m))
        W, _ = shrinkage_covariance(X)
        cov = partition_w1(W, m, n)
        assert np.array_equal(assemble_w1(cov.Sigma_u1, cov.Sigma_b1, cov.M1), W)
        assert np.array_equal(cov.W1, W)


def test_covariance_model_builds_w1():
    cov = CovarianceModel(np.eye(2), [[2.0]], [[0.5], [0.0]])
    np.testing.assert_array_equal(cov.W1, [[2, -0.5, 0], [-0.5, 1, 0], [0, 0, 1]])


def test_scale_kh():
    np.testing.assert_array_equal(scale_kh(np.eye(2), KhMode.ONE, 4), np.eye(2))
    np.testing.assert_array_equal(scale_kh(np.eye(2), KhMode.H, 4), 4 * np.eye(2))
    np.testing.assert_array_equal(scale_kh(np.zeros((2, 2)), "h", 7), np.zeros((2, 2)))
    with pytest.raises(ValidationError):
        scale_kh(np.eye(2), KhMode.H, 0)


def test_upper_noise_identity(fig1):
    """Upper noise u_hat - A b equals the negated upper residual on coherent data."""
    rng = np.random.default_rng(21)
    actual = aggregate_bottom(rng.normal(size=(60, 4)), fig1).values
    forecast = actual + rng.normal(size=actual.shape)  # incoherent forecasts
    resid = actual - forecast
    k = fig1.n_upper
    eps = forecast[:, :k] - actual[:, k:] @ fig1.A.T
    np.testing.assert_array_equal(eps, forecast[:, :k] - actual[:, :k])
    cov = partition_w1(sample_covariance(resid), 7, 4)
    np.testing.assert_allclose(sample_covariance(eps), cov.Sigma_u1, rtol=1e-12, atol=1e-14)
    # cross-covariance of bottom residuals with the upper noise is M1
    both = np.hstack([resid[:, k:], eps])
    np.testing.assert_allclose(sample_covariance(both)[:4, 4:], cov.M1, rtol=1e-12, atol=1e-14)

"""Seeded Gaussian sampling and the energy score."""

import hashlib
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import pdist, squareform

from .errors import NumericalError, ValidationError

__all__ = [
    "ScoreReport",
    "derive_seed",
    "make_rng",
    "psd_factor",
    "sample_gaussian",
    "energy_score",
    "energy_score_gaussian",
]

DEFAULT_SAMPLES = 2000


def derive_seed(master, *keys):
    """Deterministic 64-bit sub-seed for a cell identified by ``keys``."""
    payload = repr((int(master),) + tuple(str(k) for k in keys)).encode()
    return int.from_bytes(hashlib.blake2b(payload, digest_size=8).digest(), "little")


def make_rng(seed):
    """Counter-based (Philox) generator; identical seed gives identical streams."""
    return np.random.Generator(np.random.Philox(int(seed)))


def psd_factor(cov, tol=1e-10):
    """Pivoted Cholesky factor ``L`` with ``L L^T = cov`` for PSD ``cov``.

    Pivots below ``tol * max(diag)`` are treated as zero, which leaves zero
    columns in ``L`` for rank-deficient matrices. Raises if the matrix has a
    clearly negative direction.
    """
    C = np.array(cov, dtype=float)
    m = C.shape[0]
    if C.shape != (m, m):
        raise ValidationError("covariance must be square")
    if m == 0:
        return C
    C = (C + C.T) / 2
    scale = float(np.max(np.diag(C))) if m else 0.0
    if scale < 0 or np.min(np.diag(C)) < -tol * max(scale, 1.0):
        raise NumericalError("covariance has negative variances")
    thresh = tol * scale
    L = np.zeros((m, m))
    R = C.copy()
    remaining = list(range(m))
    for col in range(m):
        if not remaining:
            break
        d = np.array([R[i, i] for i in remaining])
        k = remaining[int(np.argmax(d))]
        pivot = R[k, k]
        if pivot <= thresh:
            break
        l = R[:, k] / np.sqrt(pivot)
        for i in range(m):
            if i not in remaining:
                l[i] = 0.0
        L[:, col] = l
        R -= np.outer(l, l)
        remaining.remove(k)
    resid = np.max(np.abs(R[np.ix_(remaining, remaining)])) if remaining else 0.0
    if resid > 1e-6 * max(scale, 1e-300):
        raise NumericalError(f"covariance is not positive semi-definite (residual {resid:.3e})")
    return L


def sample_gaussian(mean, cov, k, seed):
    """``k`` draws ``mean + L z`` from ``N(mean, cov)`` as a ``k x m`` array."""
    mean = np.asarray(mean, dtype=float)
    if k < 1:
        raise ValidationError("sample count must be >= 1")
    L = psd_factor(cov)
    if L.shape[0] != mean.shape[0]:
        raise ValidationError("mean and covariance dimensions differ")
    z = make_rng(seed).standard_normal((int(k), mean.shape[0]))
    return mean + z @ L.T


def _running_total(values):
    # strict left-to-right accumulation, matching a plain ``total += x`` loop
    if values.size == 0:
        return 0.0
    return float(np.cumsum(values, dtype=float)[-1])


def energy_score(samples, y):
    """Sample energy score of observation ``y`` under the ensemble ``samples``.

    ``ES = (1/k) sum_i ||x_i - y|| - 1/(2k^2) sum_i sum_j ||x_i - x_j||``

    Both sums accumulate left to right over ``i`` then ``j`` so the result is
    bit-identical to an explicit double loop.
    """
    X = np.asarray(samples, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if y.ndim == 0:
        y = y[None]
    k = X.shape[0]
    if k == 0:
        raise ValidationError("energy score needs at least one sample")
    if X.shape[1] != y.shape[0]:
        raise ValidationError(
            f"sample dimension {X.shape[1]} does not match observation dimension {y.shape[0]}"
        )
    D = X - y
    sq = np.zeros(k)
    for c in range(D.shape[1]):
        sq += D[:, c] * D[:, c]
    first = _running_total(np.sqrt(sq))
    pair = squareform(pdist(X, "euclidean")) if k > 1 else np.zeros((1, 1))
    second = _running_total(pair.ravel())
    return first / k - second / (2 * k * k)


@dataclass(frozen=True)
class ScoreReport:
    method: str
    h: int
    energy_score: float
    k: int
    seed: int


def energy_score_gaussian(dist, y, k=DEFAULT_SAMPLES, seed=0):
    """Energy score of ``y`` under a reconciled Gaussian via ``k`` seeded draws."""
    y = np.asarray(y, dtype=float)
    if y.shape != dist.full_mean.shape:
        raise ValidationError(
            f"observation has shape {y.shape}, distribution has {dist.full_mean.shape}"
        )
    X = sample_gaussian(dist.full_mean, dist.full_cov, k, seed)
    method = getattr(dist.method, "value", dist.method)
    return ScoreReport(method, dist.h, energy_score(X, y), int(k), int(seed))

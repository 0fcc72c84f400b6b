"""Covariance estimation from one-step residuals.

Residuals follow the ``actual - forecast`` convention. The full residual
covariance ``W1`` is estimated once (with Schafer-Strimmer shrinkage towards
its diagonal) and then partitioned into the blocks the Bayesian update needs:

* ``Sigma_b1`` -- bottom x bottom block,
* ``Sigma_u1`` -- upper x upper block (covariance of the upper-forecast noise),
* ``M1`` -- ``Cov(B, eps_u)`` where ``eps_u = u_hat - A b``. Since the sample
  upper noise is the negated upper residual, ``M1 = -W1[bottom, upper]``.
"""

import enum
from dataclasses import dataclass

import numpy as np

from .errors import NumericalError, ValidationError

__all__ = [
    "KhMode",
    "ResidualMatrix",
    "CovarianceModel",
    "sample_covariance",
    "shrinkage_intensity",
    "shrinkage_covariance",
    "partition_w1",
    "assemble_w1",
    "scale_kh",
    "estimate_covariance",
]

SYMMETRY_RTOL = 1e-12


class KhMode(enum.Enum):
    """How the h-step covariance scales the one-step one: ``W_h = k_h W_1``."""

    ONE = "one"
    H = "h"

    def factor(self, h):
        if h < 1:
            raise ValidationError(f"horizon must be >= 1, got {h}")
        return 1.0 if self is KhMode.ONE else float(h)

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValidationError(f"unknown k_h mode {value!r} (use 'one' or 'h')") from None


@dataclass(frozen=True)
class ResidualMatrix:
    """``N x m`` in-sample one-step residuals, columns in hierarchy order."""

    values: np.ndarray
    names: tuple

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 2:
            raise ValidationError("residual matrix must be 2-D (N x m)")
        if values.shape[0] < 2:
            raise ValidationError(
                f"at least 2 residual rows are needed, got {values.shape[0]}"
            )
        if not np.all(np.isfinite(values)):
            raise ValidationError("residual matrix contains non-finite entries")
        if len(self.names) != values.shape[1]:
            raise ValidationError(
                f"residual matrix has {values.shape[1]} columns but {len(self.names)} names"
            )
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "names", tuple(self.names))

    @property
    def N(self):
        return self.values.shape[0]


@dataclass(frozen=True)
class CovarianceModel:
    """One-step covariance blocks shared by every horizon (scaled by ``k_h``)."""

    Sigma_b1: np.ndarray
    Sigma_u1: np.ndarray
    M1: np.ndarray
    W1: np.ndarray = None
    kh_mode: KhMode = KhMode.ONE
    shrink_lambda: float = float("nan")

    def __post_init__(self):
        Sb = np.atleast_2d(np.asarray(self.Sigma_b1, dtype=float))
        n = Sb.shape[0]
        Su = np.asarray(self.Sigma_u1, dtype=float)
        Su = Su.reshape(0, 0) if Su.size == 0 else np.atleast_2d(Su)
        k = Su.shape[0]
        M = np.asarray(self.M1, dtype=float).reshape(n, k)
        if Sb.shape != (n, n) or Su.shape != (k, k):
            raise ValidationError("covariance blocks must be square")
        object.__setattr__(self, "Sigma_b1", Sb)
        object.__setattr__(self, "Sigma_u1", Su)
        object.__setattr__(self, "M1", M)
        if self.W1 is None:
            object.__setattr__(self, "W1", assemble_w1(Su, Sb, M))
        object.__setattr__(self, "kh_mode", KhMode.parse(self.kh_mode))

    @property
    def n(self):
        return self.Sigma_b1.shape[0]

    @property
    def n_upper(self):
        return self.Sigma_u1.shape[0]


def _as_array(R):
    X = np.asarray(getattr(R, "values", R), dtype=float)
    if X.ndim != 2:
        raise ValidationError("residuals must be a 2-D array (N x m)")
    if X.shape[0] < 2:
        raise ValidationError(f"at least 2 residual rows are needed, got {X.shape[0]}")
    if not np.all(np.isfinite(X)):
        raise ValidationError("residuals contain non-finite entries")
    return X


def sample_covariance(R):
    """Unbiased (divisor ``N - 1``) column-centred covariance of residual rows."""
    X = _as_array(R)
    Xc = X - X.mean(axis=0)
    C = Xc.T @ Xc / (X.shape[0] - 1)
    return (C + C.T) / 2


def shrinkage_intensity(R):
    """Schafer-Strimmer optimal shrinkage intensity for a diagonal target.

    Computed on the correlation scale::

        lambda = sum_{i != j} Var(r_ij) / sum_{i != j} r_ij**2

    with ``Var(r_ij) = N / (N-1)**3 * sum_k (w_kij - wbar_ij)**2`` and
    ``w_kij = x_ki x_kj`` on standardised columns, clamped to ``[0, 1]``.
    Columns with zero variance contribute nothing. Returns ``1.0`` when there
    is no off-diagonal correlation to shrink.
    """
    X = _as_array(R)
    N, m = X.shape
    if m < 2:
        return 1.0
    Xc = X - X.mean(axis=0)
    sd = np.sqrt(np.sum(Xc * Xc, axis=0) / (N - 1))
    live = sd > 0
    Z = np.zeros_like(Xc)
    Z[:, live] = Xc[:, live] / sd[live]

    W = Z.T @ Z / N  # wbar_ij
    R_corr = W * N / (N - 1)
    # sum_k (w_kij - wbar_ij)^2 = sum_k w_kij^2 - N wbar_ij^2
    W2 = (Z * Z).T @ (Z * Z)
    var_r = N / (N - 1) ** 3 * (W2 - N * W * W)

    off = ~np.eye(m, dtype=bool)
    denom = np.sum(R_corr[off] ** 2)
    if denom <= 0:
        return 1.0
    lam = np.sum(var_r[off]) / denom
    return float(min(1.0, max(0.0, lam)))


def shrinkage_covariance(R, jitter=1e-8, lam=None):
    """Shrink the sample covariance towards its diagonal.

    Parameters
    ----------
    R : ResidualMatrix or array_like
        ``N x m`` residuals, ``N >= 2``.
    jitter : float
        Relative ridge added (times the mean sample variance) if the shrunk
        matrix is not Cholesky-factorisable. Applied at most once.
    lam : float, optional
        Force the intensity instead of estimating it.

    Returns
    -------
    W : ndarray
        ``lam * diag(S) + (1 - lam) * S``, possibly plus the ridge.
    lam : float
        Intensity used.
    """
    if jitter < 0:
        raise ValidationError("jitter must be nonnegative")
    S = sample_covariance(R)
    if lam is None:
        lam = shrinkage_intensity(R)
    elif not 0.0 <= lam <= 1.0:
        raise ValidationError(f"shrinkage intensity must lie in [0, 1], got {lam}")
    # lam * diag(S) + (1 - lam) * S, keeping the diagonal exactly
    W = S.copy() if lam == 0.0 else (1.0 - lam) * S
    np.fill_diagonal(W, np.diag(S))
    if _is_pd(W):
        return W, lam
    ridge = jitter * float(np.mean(np.diag(S)))
    if ridge <= 0:
        raise NumericalError(
            "shrunk covariance is not positive definite and no jitter can be applied "
            "(zero-variance residual column with jitter=0?)",
            condition=float(np.linalg.cond(W)),
        )
    W = W + ridge * np.eye(W.shape[0])
    if not _is_pd(W):
        raise NumericalError(
            "shrunk covariance is not positive definite even after jitter",
            condition=float(np.linalg.cond(W)),
        )
    return W, lam


def _is_pd(M):
    try:
        np.linalg.cholesky(M)
    except np.linalg.LinAlgError:
        return False
    return True


def partition_w1(W1, m, n, kh_mode=KhMode.ONE, shrink_lambda=float("nan")):
    """Split an ``m x m`` covariance ordered uppers-then-bottoms into blocks.

    ``M1[i, j] = -W1[bottom i, upper j]``: the upper forecast noise is
    ``u_hat - A b``, the negation of the upper residual.
    """
    W1 = np.asarray(W1, dtype=float)
    if W1.shape != (m, m) or not 1 <= n <= m:
        raise ValidationError(f"W1 of shape {W1.shape} does not match (m, n) = ({m}, {n})")
    scale = max(1.0, float(np.max(np.abs(W1)))) if W1.size else 1.0
    if np.max(np.abs(W1 - W1.T)) > SYMMETRY_RTOL * scale:
        raise ValidationError("W1 is not symmetric")
    k = m - n
    Sigma_u1 = W1[:k, :k].copy()
    Sigma_b1 = W1[k:, k:].copy()
    M1 = -W1[k:, :k].copy()
    if not _is_pd(Sigma_b1):
        raise NumericalError("bottom block of W1 is not positive definite")
    if k and not _is_pd(Sigma_u1):
        raise NumericalError("upper block of W1 is not positive definite")
    return CovarianceModel(
        Sigma_b1=Sigma_b1,
        Sigma_u1=Sigma_u1,
        M1=M1,
        W1=W1.copy(),
        kh_mode=kh_mode,
        shrink_lambda=shrink_lambda,
    )


def assemble_w1(Sigma_u1, Sigma_b1, M1):
    """Inverse of :func:`partition_w1`: ``[[Sigma_u1, -M1.T], [-M1, Sigma_b1]]``."""
    return np.block([[Sigma_u1, -M1.T], [-M1, Sigma_b1]])


def scale_kh(block, kh_mode, h):
    """``k_h * block`` with ``k_h = 1`` or ``k_h = h``."""
    return KhMode.parse(kh_mode).factor(h) * np.asarray(block, dtype=float)


def estimate_covariance(R, n, kh_mode=KhMode.ONE, jitter=1e-8):
    """Shrinkage ``W1`` from residuals, partitioned for a hierarchy with ``n`` bottoms."""
    W1, lam = shrinkage_covariance(R, jitter=jitter)
    return partition_w1(W1, W1.shape[0], n, kh_mode=kh_mode, shrink_lambda=lam)

"""Probabilistic reconciliation by Gaussian conditioning.

The bottom series have prior ``B ~ N(b_hat, k_h Sigma_b1)`` and the upper base
forecasts are noisy observations ``u_hat = A B + eps_u`` with
``Cov(eps_u) = k_h Sigma_u1`` and ``Cov(B, eps_u) = k_h M1``. Conditioning on
``u_hat`` gives

    b_tilde = b_hat + G (u_hat - A b_hat)
    Var     = k_h (Sigma_b1 - G (A Sigma_b1 + M1^T))

with the gain ``G = (Sigma_b1 A^T + M1)(A Sigma_b1 A^T + Sigma_u1 + A M1 + M1^T A^T)^-1``
(pMinT). Setting ``M1 = 0`` gives the LG variant. ``k_h`` cancels in ``G``.
"""

import enum
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .covariance import CovarianceModel, KhMode
from .errors import NumericalError, ValidationError

__all__ = [
    "Method",
    "ReconciledDistribution",
    "gain_matrix",
    "reconcile_pmint",
    "reconcile_bottom_up",
    "reconcile",
    "mint_p_matrix",
    "pmint_p_matrix",
    "two_bottom_gains",
    "repair_psd",
]

PSD_CLIP = 1e-10


class Method(enum.Enum):
    BU = "BU"
    LG = "LG"
    PMINT = "PMINT"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).upper())
        except ValueError:
            raise ValidationError(
                f"unknown method {value!r} (use one of bu, lg, pmint)"
            ) from None


@dataclass(frozen=True)
class ReconciledDistribution:
    """Coherent Gaussian predictive distribution over the whole hierarchy."""

    method: Method
    h: int
    kh_mode: KhMode
    bottom_mean: np.ndarray
    bottom_cov: np.ndarray
    full_mean: np.ndarray
    full_cov: np.ndarray
    names: tuple = ()
    shrink_lambda: float = float("nan")

    @classmethod
    def from_bottom(cls, method, h, kh_mode, bottom_mean, bottom_cov, summing,
                    shrink_lambda=float("nan")):
        S = summing.S
        full_cov = S @ bottom_cov @ S.T
        return cls(
            method=Method.parse(method),
            h=int(h),
            kh_mode=KhMode.parse(kh_mode),
            bottom_mean=bottom_mean,
            bottom_cov=bottom_cov,
            full_mean=S @ bottom_mean,
            full_cov=(full_cov + full_cov.T) / 2,
            names=summing.names,
            shrink_lambda=float(shrink_lambda),
        )

    @property
    def m(self):
        return self.full_mean.shape[0]

    def to_dict(self):
        lam = self.shrink_lambda
        return {
            "method": self.method.value,
            "h": self.h,
            "kh_mode": self.kh_mode.value,
            "names": list(self.names),
            "mean": self.full_mean.tolist(),
            "covariance": self.full_cov.ravel().tolist(),
            "bottom_mean": self.bottom_mean.tolist(),
            "bottom_covariance": self.bottom_cov.ravel().tolist(),
            "shrink_lambda": None if np.isnan(lam) else lam,
        }

    @classmethod
    def from_dict(cls, doc):
        try:
            mean = np.asarray(doc["mean"], dtype=float)
            m = mean.shape[0]
            bmean = np.asarray(doc["bottom_mean"], dtype=float)
            n = bmean.shape[0]
            lam = doc.get("shrink_lambda")
            return cls(
                method=Method.parse(doc["method"]),
                h=int(doc["h"]),
                kh_mode=KhMode.parse(doc["kh_mode"]),
                bottom_mean=bmean,
                bottom_cov=np.asarray(doc["bottom_covariance"], dtype=float).reshape(n, n),
                full_mean=mean,
                full_cov=np.asarray(doc["covariance"], dtype=float).reshape(m, m),
                names=tuple(doc["names"]),
                shrink_lambda=float("nan") if lam is None else float(lam),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"malformed reconciled distribution: {exc}") from exc


def _inner_and_cross(cov, A, variant):
    A = np.asarray(A, dtype=float)
    Sb, Su = cov.Sigma_b1, cov.Sigma_u1
    M = cov.M1 if variant is Method.PMINT else np.zeros_like(cov.M1)
    if A.shape != (Su.shape[0], Sb.shape[0]):
        raise ValidationError(
            f"A has shape {A.shape}, expected {(Su.shape[0], Sb.shape[0])}"
        )
    cross = Sb @ A.T + M  # Cov(B, U_hat) / k_h
    inner = A @ Sb @ A.T + Su + A @ M + M.T @ A.T  # Var(U_hat) / k_h
    return cross, (inner + inner.T) / 2, M


def _solve_sym(K, rhs):
    """Solve ``K X = rhs`` for symmetric ``K`` without forming an inverse."""
    cond = np.linalg.cond(K) if K.size else 1.0
    if not np.isfinite(cond) or cond * np.finfo(float).eps > 1e-2:
        raise NumericalError("singular innovation covariance in gain computation", cond)
    try:
        return linalg.cho_solve(linalg.cho_factor(K, lower=True), rhs)
    except linalg.LinAlgError:
        # symmetric but indefinite: fall back to Bunch-Kaufman
        return linalg.solve(K, rhs, assume_a="sym")


def gain_matrix(cov, A, variant=Method.PMINT):
    """Gain ``G`` (``n x (m-n)``) of the Bayesian update.

    Parameters
    ----------
    cov : CovarianceModel
    A : ndarray
        ``(m-n) x n`` aggregation block of the summing matrix.
    variant : Method
        ``PMINT`` uses the cross-covariance ``M1``; ``LG`` drops it.

    Raises
    ------
    NumericalError
        If the innovation covariance is numerically singular.
    """
    variant = Method.parse(variant)
    if variant is Method.BU:
        raise ValidationError("bottom-up reconciliation has no gain matrix")
    cross, inner, _ = _inner_and_cross(cov, A, variant)
    if inner.size == 0:
        return np.zeros((cov.n, 0))
    # G K = C  <=>  K G^T = C^T  (K symmetric)
    return _solve_sym(inner, cross.T).T


def repair_psd(C, tol=PSD_CLIP):
    """Symmetrise and clip tiny negative eigenvalues of a covariance.

    Eigenvalues below ``-tol * trace`` are treated as a genuine error.
    """
    C = (C + C.T) / 2
    if C.size == 0:
        return C
    w, V = np.linalg.eigh(C)
    if w.min() >= 0:
        return C
    if w.min() < -tol * max(float(np.trace(C)), 0.0):
        raise NumericalError(
            f"posterior covariance is indefinite (min eigenvalue {w.min():.3e})"
        )
    C = (V * np.clip(w, 0.0, None)) @ V.T
    return (C + C.T) / 2


def reconcile_pmint(y_hat, cov, summing, h=1, kh_mode=KhMode.ONE, variant=Method.PMINT):
    """Condition the bottom prior on the upper base forecasts.

    Parameters
    ----------
    y_hat : array_like
        Base forecasts ``[u_hat; b_hat]`` for one horizon, hierarchy order.
    cov : CovarianceModel
        One-step covariance blocks.
    summing : SummingMatrix
    h : int
        Forecast horizon (only enters through ``k_h``).
    kh_mode : KhMode
    variant : Method
        ``PMINT`` or ``LG``.

    Returns
    -------
    ReconciledDistribution
    """
    variant = Method.parse(variant)
    kh_mode = KhMode.parse(kh_mode)
    y_hat = np.asarray(y_hat, dtype=float)
    if y_hat.shape != (summing.m,):
        raise ValidationError(f"base forecast has shape {y_hat.shape}, expected ({summing.m},)")
    if cov.n != summing.n or cov.n_upper != summing.n_upper:
        raise ValidationError("covariance blocks do not match the hierarchy")
    A = summing.A
    u_hat, b_hat = y_hat[: summing.n_upper], y_hat[summing.n_upper:]
    G = gain_matrix(cov, A, variant)
    _, _, M = _inner_and_cross(cov, A, variant)
    b_tilde = b_hat + G @ (u_hat - A @ b_hat)
    post = cov.Sigma_b1 - G @ (A @ cov.Sigma_b1 + M.T)
    bottom_cov = kh_mode.factor(h) * repair_psd(post)
    return ReconciledDistribution.from_bottom(
        variant, h, kh_mode, b_tilde, bottom_cov, summing, cov.shrink_lambda
    )


def reconcile_bottom_up(b_hat, Sigma_b1, summing, h=1, kh_mode=KhMode.ONE,
                        shrink_lambda=float("nan")):
    """Probabilistic bottom-up: ``N(S b_hat, k_h S Sigma_b1 S^T)``."""
    kh_mode = KhMode.parse(kh_mode)
    b_hat = np.asarray(b_hat, dtype=float)
    Sigma_b1 = np.atleast_2d(np.asarray(Sigma_b1, dtype=float))
    if b_hat.shape != (summing.n,) or Sigma_b1.shape != (summing.n, summing.n):
        raise ValidationError("bottom forecast or covariance does not match the hierarchy")
    bottom_cov = kh_mode.factor(h) * (Sigma_b1 + Sigma_b1.T) / 2
    return ReconciledDistribution.from_bottom(
        Method.BU, h, kh_mode, b_hat.copy(), bottom_cov, summing, shrink_lambda
    )


def reconcile(method, y_hat, cov, summing, h=1, kh_mode=KhMode.ONE):
    """Dispatch on ``method`` for a full base-forecast vector."""
    method = Method.parse(method)
    if method is Method.BU:
        return reconcile_bottom_up(
            np.asarray(y_hat)[summing.n_upper:], cov.Sigma_b1, summing, h, kh_mode,
            cov.shrink_lambda,
        )
    return reconcile_pmint(y_hat, cov, summing, h, kh_mode, method)


def mint_p_matrix(W, summing):
    """MinT projection ``P = (S^T W^-1 S)^-1 S^T W^-1`` via Cholesky solves."""
    S = summing.S if hasattr(summing, "S") else np.asarray(summing, dtype=float)
    W = np.asarray(W, dtype=float)
    try:
        Wf = linalg.cho_factor(W, lower=True)
    except linalg.LinAlgError:
        raise NumericalError("W is not positive definite", float(np.linalg.cond(W))) from None
    WinvS = linalg.cho_solve(Wf, S)
    Q = S.T @ WinvS
    Q = (Q + Q.T) / 2
    try:
        Qf = linalg.cho_factor(Q, lower=True)
    except linalg.LinAlgError:
        raise NumericalError("S^T W^-1 S is singular", float(np.linalg.cond(Q))) from None
    return linalg.cho_solve(Qf, WinvS.T)


def pmint_p_matrix(G, A):
    """``[G | I - G A]``: bottom reconciliation as a linear map of ``[u_hat; b_hat]``."""
    G = np.atleast_2d(np.asarray(G, dtype=float))
    A = np.asarray(A, dtype=float).reshape(G.shape[1], -1)
    n = A.shape[1]
    if G.shape[0] != n:
        raise ValidationError(f"G has {G.shape[0]} rows, A has {n} columns")
    return np.hstack([G, np.eye(n) - G @ A])


def two_bottom_gains(s1, s2, s12, su, su1=0.0, su2=0.0):
    """Closed-form gains for one upper ``U = B1 + B2``.

    ``s1, s2, s12`` are the bottom (co)variances, ``su`` the upper noise
    variance and ``su1, su2`` the covariances between each bottom and the
    upper residual (``-M1``). Returns ``(g1, g2, g1_star, g2_star)``: the LG
    and pMinT gains.
    """
    d = su + s1 + s2 + 2 * s12
    d_star = d - 2 * su1 - 2 * su2
    if d == 0 or d_star == 0:
        raise ZeroDivisionError("degenerate two-bottom gain denominator")
    return (
        (s1 + s12) / d,
        (s2 + s12) / d,
        (s1 + s12 - su1) / d_star,
        (s2 + s12 - su2) / d_star,
    )

"""Base forecasts: independent per-series AR(p) models fitted by least squares.

Every series of the hierarchy (uppers included) gets its own model; the
in-sample one-step residuals of all series feed the covariance estimate.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from .covariance import ResidualMatrix
from .errors import ValidationError

__all__ = [
    "ARModel",
    "BaseForecasts",
    "fit_ar",
    "forecast_ar",
    "one_step_residuals",
    "forecast_panel",
    "MAX_ORDER",
]

MAX_ORDER = 5


@dataclass(frozen=True)
class ARModel:
    """``y_t = c + sum_i phi_i y_{t-i} + e_t``.

    ``fallback`` is set when the design was singular and the model collapsed
    to its intercept (all ``phi`` zero, order kept so residuals stay aligned).
    """

    order: int
    intercept: float
    coefs: tuple
    sigma2: float
    n_obs: int
    fallback: bool = False

    def predict_next(self, recent):
        """One-step prediction from the last ``order`` values (oldest first)."""
        p = self.order
        if p == 0:
            return self.intercept
        lags = np.asarray(recent[-p:], dtype=float)[::-1]
        return self.intercept + float(np.dot(self.coefs, lags))


def _lagged_design(y, p):
    T = len(y)
    cols = [np.ones(T - p)]
    for i in range(1, p + 1):
        cols.append(y[p - i:T - i])
    return np.column_stack(cols), y[p:]


def _check_series(series, p):
    y = np.asarray(series, dtype=float)
    if y.ndim != 1:
        raise ValidationError("series must be one-dimensional")
    if not np.all(np.isfinite(y)):
        raise ValidationError("series contains non-finite values")
    if not 0 <= p <= MAX_ORDER or int(p) != p:
        raise ValidationError(f"AR order must be an integer in 0..{MAX_ORDER}, got {p}")
    if len(y) < p + 2:
        raise ValidationError(f"series of length {len(y)} is too short for AR({p})")
    return y


def fit_ar(series, p=1):
    """Least-squares AR(``p``) fit with intercept.

    ``sigma2`` is the residual sum of squares over ``T - p - (p + 1)``
    (floored at one degree of freedom). A singular design (e.g. a constant
    series) falls back to the intercept-only model with ``fallback=True``.
    """
    p = int(p)
    y = _check_series(series, p)
    X, target = _lagged_design(y, p)
    dof = max(len(target) - (p + 1), 1)
    if p > 0 and np.linalg.matrix_rank(X) < p + 1:
        warnings.warn(
            "singular AR design matrix; falling back to an intercept-only model",
            RuntimeWarning,
            stacklevel=2,
        )
        c = float(target.mean())
        resid = target - c
        return ARModel(p, c, (0.0,) * p, float(resid @ resid) / dof, len(y), True)
    beta, *_ = np.linalg.lstsq(X, target, rcond=None)
    resid = target - X @ beta
    return ARModel(
        order=p,
        intercept=float(beta[0]),
        coefs=tuple(float(b) for b in beta[1:]),
        sigma2=float(resid @ resid) / dof,
        n_obs=len(y),
    )


def forecast_ar(model, history, H):
    """Iterated plug-in mean forecasts for steps ``1..H`` after ``history``."""
    history = np.asarray(history, dtype=float)
    if len(history) < model.order:
        raise ValidationError(
            f"need at least {model.order} past values, got {len(history)}"
        )
    if H < 1:
        raise ValidationError("horizon must be >= 1")
    buf = list(history[len(history) - model.order:]) if model.order else []
    out = np.empty(H)
    for h in range(H):
        out[h] = model.predict_next(buf)
        if model.order:
            buf = buf[1:] + [out[h]]
    return out


def one_step_residuals(model, series):
    """In-sample residuals ``y_t - yhat_t`` for ``t = p+1..T`` (actual - forecast)."""
    y = np.asarray(series, dtype=float)
    if len(y) != model.n_obs:
        raise ValidationError(
            f"series length {len(y)} differs from the fitted length {model.n_obs}"
        )
    p = model.order
    X, target = _lagged_design(y, p)
    beta = np.array((model.intercept,) + tuple(model.coefs))
    return target - X @ beta


@dataclass(frozen=True)
class BaseForecasts:
    """``H x m`` base point forecasts, columns uppers-then-bottoms."""

    means: np.ndarray
    names: tuple
    n_upper: int
    origin: int = 0

    def __post_init__(self):
        means = np.array(self.means, dtype=float)
        if means.ndim != 2 or means.shape[0] < 1:
            raise ValidationError("base forecasts must be an H x m array with H >= 1")
        if not np.all(np.isfinite(means)):
            raise ValidationError("base forecasts contain non-finite values")
        if len(self.names) != means.shape[1]:
            raise ValidationError("one name per forecast column is required")
        if not 0 <= self.n_upper < means.shape[1]:
            raise ValidationError("n_upper must leave at least one bottom series")
        means.setflags(write=False)
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "names", tuple(self.names))

    @property
    def H(self):
        return self.means.shape[0]

    @property
    def m(self):
        return self.means.shape[1]

    def row(self, h):
        """Full forecast vector ``y_hat`` for horizon ``h`` (1-based)."""
        if not 1 <= h <= self.H:
            raise ValidationError(f"horizon {h} outside 1..{self.H}")
        return self.means[h - 1]

    def upper(self, h):
        return self.row(h)[: self.n_upper]

    def bottom(self, h):
        return self.row(h)[self.n_upper:]


def forecast_panel(panel, summing, p=1, H=4):
    """Fit one AR(``p``) per column of a full panel.

    Returns
    -------
    BaseForecasts
        Forecasts for steps ``1..H`` after the last row of ``panel``.
    ResidualMatrix
        ``(T - p) x m`` in-sample one-step residuals.
    """
    values = np.asarray(getattr(panel, "values", panel), dtype=float)
    if values.ndim != 2 or values.shape[1] != summing.m:
        raise ValidationError(
            f"panel has shape {values.shape}, expected (T, {summing.m})"
        )
    means = np.empty((H, summing.m))
    resid = np.empty((values.shape[0] - p, summing.m))
    for j in range(summing.m):
        model = fit_ar(values[:, j], p)
        means[:, j] = forecast_ar(model, values[:, j], H)
        resid[:, j] = one_step_residuals(model, values[:, j])
    base = BaseForecasts(means, summing.names, summing.n_upper, origin=values.shape[0])
    return base, ResidualMatrix(resid, summing.names)

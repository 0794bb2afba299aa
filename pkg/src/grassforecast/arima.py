"""ARIMA(p, d, q) with conditional-sum-of-squares estimation.

After ``d`` rounds of differencing, the model for the differenced series
``w`` is

    w_t = c + sum_i phi_i * w_{t-i} + sum_j theta_j * e_{t-j} + e_t

AR-only and MA-only processes are the special cases ``q = 0`` and
``p = 0`` of the same code path. Pre-sample innovations are zero and point
forecasts set the unknown current innovation to zero.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from math import comb

import numpy as np
from scipy import optimize, signal

from .errors import (
    ConfigError,
    HeadMismatch,
    InsufficientHistory,
    NonConvergence,
    SeriesTooShort,
)

__all__ = [
    "ArimaOrder",
    "ArimaModel",
    "difference",
    "undifference",
    "arma_one_step",
    "css_residuals",
    "fit",
    "one_step_predictions",
    "forecast_test",
    "forecast_recursive",
]

MAX_ITER = 2000
SIMPLEX_TOL = 1e-8


@dataclass(frozen=True)
class ArimaOrder:
    p: int
    d: int
    q: int

    def __post_init__(self):
        if min(self.p, self.d, self.q) < 0:
            raise ConfigError(f"ARIMA orders must be non-negative, got {self}")
        if self.p + self.q < 1 and self.d < 1:
            raise ConfigError("ARIMA(0,0,0) has no dynamics; need p + q >= 1 or d >= 1")


@dataclass(frozen=True, eq=False)
class ArimaModel:
    """Fitted coefficients for the differenced series.

    ``mu`` is the implied mean of the differenced process, ``c / (1 - sum(phi))``;
    it is NaN when the AR polynomial has a unit root at 1.
    """

    order: ArimaOrder
    c: float
    phi: np.ndarray
    theta: np.ndarray
    residuals: np.ndarray = field(default_factory=lambda: np.zeros(0))
    sigma2: float = float("nan")
    converged: bool = True
    iterations: int = 0

    def __post_init__(self):
        phi = np.asarray(self.phi, dtype=np.float64).reshape(-1)
        theta = np.asarray(self.theta, dtype=np.float64).reshape(-1)
        if phi.size != self.order.p or theta.size != self.order.q:
            raise ConfigError(
                f"order {self.order} needs {self.order.p} AR and {self.order.q} MA "
                f"coefficients, got {phi.size} and {theta.size}"
            )
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "c", float(self.c))
        object.__setattr__(self, "residuals", np.asarray(self.residuals, dtype=np.float64))

    @property
    def mu(self) -> float:
        denom = 1.0 - float(self.phi.sum())
        return self.c / denom if abs(denom) > 1e-12 else float("nan")

    def is_stationary(self) -> bool:
        return _roots_outside_unit_circle(np.r_[1.0, -self.phi])

    def is_invertible(self) -> bool:
        return _roots_outside_unit_circle(np.r_[1.0, self.theta])


def _roots_outside_unit_circle(poly_low_to_high: np.ndarray) -> bool:
    coeffs = np.trim_zeros(poly_low_to_high, "b")
    if coeffs.size <= 1:
        return True
    roots = np.roots(coeffs[::-1])
    return bool(np.all(np.abs(roots) > 1.0))


# ------------------------------------------------------------------ differencing


def difference(series, d: int):
    """Apply ``d`` first differences.

    Returns ``(diffed, heads)`` where ``heads[k]`` is the first value of the
    level-``k`` series, which is what :func:`undifference` needs to rebuild it.
    """
    values = np.asarray(getattr(series, "values", series), dtype=np.float64)
    if d < 0:
        raise ConfigError("differencing order must be non-negative")
    if values.size <= d:
        raise SeriesTooShort(f"cannot difference a length-{values.size} series {d} times")
    heads = []
    for _ in range(d):
        heads.append(float(values[0]))
        values = np.diff(values)
    return values, np.array(heads)


def undifference(diffed, heads, d: int) -> np.ndarray:
    values = np.asarray(diffed, dtype=np.float64)
    heads = np.asarray(heads, dtype=np.float64).reshape(-1)
    if heads.size != d:
        raise HeadMismatch(f"{d}-fold differencing needs {d} heads, got {heads.size}")
    for head in heads[::-1]:
        values = np.concatenate([[head], head + np.cumsum(values)])
    return values


def _integration_weights(d: int) -> np.ndarray:
    """Coefficients ``a`` with ``y_t = w_t + sum_j a[j-1] * y_{t-j}`` for d-th differences."""
    return np.array([-((-1) ** j) * comb(d, j) for j in range(1, d + 1)], dtype=np.float64)


# ----------------------------------------------------------------------- ARMA


def arma_one_step(model: ArimaModel, recent_y, recent_eps=()) -> float:
    """One-step forecast of the differenced series.

    ``recent_y`` and ``recent_eps`` are chronological; only their last p and
    q entries are used.
    """
    p, q = model.order.p, model.order.q
    y = np.asarray(recent_y, dtype=np.float64).reshape(-1)
    eps = np.asarray(recent_eps, dtype=np.float64).reshape(-1)
    if y.size < p or eps.size < q:
        raise InsufficientHistory(
            f"need {p} past values and {q} past residuals, got {y.size} and {eps.size}"
        )
    pred = model.c
    if p:
        pred += float(np.dot(model.phi, y[::-1][:p]))
    if q:
        pred += float(np.dot(model.theta, eps[::-1][:q]))
    return pred


def _ar_part(w: np.ndarray, c: float, phi: np.ndarray) -> np.ndarray:
    """``w_t - c - sum phi_i w_{t-i}`` for t >= p."""
    p = phi.size
    u = w[p:] - c
    for i in range(1, p + 1):
        u = u - phi[i - 1] * w[p - i : w.size - i]
    return u


def css_residuals(w, c: float, phi, theta) -> np.ndarray:
    """In-sample innovations for t >= p with zero pre-sample innovations."""
    w = np.asarray(w, dtype=np.float64)
    phi = np.asarray(phi, dtype=np.float64)
    theta = np.asarray(theta, dtype=np.float64)
    u = _ar_part(w, c, phi)
    if theta.size == 0:
        return u
    # e_t + sum theta_j e_{t-j} = u_t
    return signal.lfilter([1.0], np.r_[1.0, theta], u)


def _ols_start(w: np.ndarray, p: int) -> tuple[float, np.ndarray]:
    if p == 0:
        return float(w.mean()), np.zeros(0)
    X = np.column_stack([np.ones(w.size - p)] + [w[p - i : w.size - i] for i in range(1, p + 1)])
    coef, *_ = np.linalg.lstsq(X, w[p:], rcond=None)
    return float(coef[0]), coef[1:]


def fit(series, order: ArimaOrder, max_iter: int = MAX_ITER, tol: float = SIMPLEX_TOL) -> ArimaModel:
    """Minimise the conditional sum of squares with Nelder-Mead.

    The simplex starts at the OLS regression of ``w_t`` on its first ``p``
    lags (plus intercept) with all MA coefficients at zero.
    """
    w, _ = difference(series, order.d)
    p, q = order.p, order.q
    if w.size <= p + q + 10:
        raise SeriesTooShort(
            f"differenced length {w.size} is too short for ARMA({p},{q}); need > {p + q + 10}"
        )
    c0, phi0 = _ols_start(w, p)
    x0 = np.r_[c0, phi0, np.zeros(q)]

    def objective(x):
        e = css_residuals(w, x[0], x[1 : 1 + p], x[1 + p :])
        sse = float(np.dot(e, e))
        return sse if np.isfinite(sse) else np.inf

    res = optimize.minimize(
        objective,
        x0,
        method="Nelder-Mead",
        options={
            "maxiter": max_iter,
            "maxfev": 10 * max_iter,
            "xatol": tol,
            "fatol": tol,
            "adaptive": True,
        },
    )
    if not res.success:
        raise NonConvergence(f"ARIMA{(p, order.d, q)} CSS did not converge: {res.message}")
    c, phi, theta = float(res.x[0]), res.x[1 : 1 + p], res.x[1 + p :]
    resid = css_residuals(w, c, phi, theta)
    model = ArimaModel(
        order,
        c,
        phi,
        theta,
        residuals=resid,
        sigma2=float(np.mean(resid**2)),
        converged=True,
        iterations=int(res.nit),
    )
    if not model.is_stationary() or not model.is_invertible():
        warnings.warn(
            f"ARIMA{(p, order.d, q)} estimate lies outside the stationary/invertible region",
            RuntimeWarning,
            stacklevel=2,
        )
    return model


# ------------------------------------------------------------------ forecasting


def one_step_predictions(model: ArimaModel, series) -> np.ndarray:
    """Walk-forward one-step forecasts in level units.

    Entry ``t`` predicts ``series[t]`` from the observed values before it and
    the residuals recursively implied by them. Positions with too little
    history (``t < d + p``) are NaN.
    """
    y = np.asarray(getattr(series, "values", series), dtype=np.float64)
    d, p, q = model.order.d, model.order.p, model.order.q
    w, _ = difference(y, d)
    out = np.full(y.size, np.nan)
    if w.size <= p:
        return out
    e = np.r_[np.zeros(q), css_residuals(w, model.c, model.phi, model.theta)]
    a = _integration_weights(d)
    for t_w in range(p, w.size):
        # e is offset by q pre-sample zeros: innovation at t_w sits at e[t_w - p + q]
        k = t_w - p + q
        w_hat = arma_one_step(model, w[t_w - p : t_w], e[k - q : k])
        t = t_w + d
        out[t] = w_hat + (float(np.dot(a, y[t - d : t][::-1])) if d else 0.0)
    return out


def forecast_test(model: ArimaModel, full_series, splits) -> np.ndarray:
    """One-step predictions for every position of the test split.

    ``full_series`` must be the concatenation train + val + test so that the
    test region begins at ``len(train) + len(val)``.
    """
    y = np.asarray(getattr(full_series, "values", full_series), dtype=np.float64)
    start = len(splits.train) + len(splits.val)
    preds = one_step_predictions(model, y)[start:]
    if np.isnan(preds).any():
        raise InsufficientHistory("not enough history before the test region")
    return preds


def forecast_recursive(model: ArimaModel, history, steps: int) -> np.ndarray:
    """``steps`` forecasts past the end of ``history``, feeding each back in."""
    y = list(np.asarray(getattr(history, "values", history), dtype=np.float64))
    d, p, q = model.order.d, model.order.p, model.order.q
    w, _ = difference(np.asarray(y), d)
    if w.size < p:
        raise InsufficientHistory(f"need at least {p + d} observations, got {len(y)}")
    eps = list(css_residuals(w, model.c, model.phi, model.theta)) if w.size > p else []
    eps = [0.0] * max(0, q - len(eps)) + eps
    w = list(w)
    a = _integration_weights(d)
    out = []
    for _ in range(steps):
        w_next = arma_one_step(model, w[-p:] if p else [], eps[-q:] if q else [])
        level = w_next + (float(np.dot(a, np.asarray(y[-d:])[::-1])) if d else 0.0)
        out.append(level)
        y.append(level)
        w.append(w_next)
        eps.append(0.0)
    return np.asarray(out)

"""Point-forecast error metrics, reported in the data's original units."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .errors import EmptyInput, LengthMismatch

__all__ = ["EvalReport", "rmse", "mae", "evaluate", "persistence_forecast"]


def _pair(observed, predicted):
    y = np.asarray(observed, dtype=np.float64).reshape(-1)
    x = np.asarray(predicted, dtype=np.float64).reshape(-1)
    if y.shape != x.shape:
        raise LengthMismatch(f"{y.size} observations vs {x.size} predictions")
    if y.size == 0:
        raise EmptyInput("metrics need at least one observation")
    if not (np.all(np.isfinite(y)) and np.all(np.isfinite(x))):
        raise ValueError("metric inputs must be finite")
    return y, x


def rmse(observed, predicted) -> float:
    y, x = _pair(observed, predicted)
    err = np.abs(y - x)
    # scale by the largest error so squaring cannot underflow or overflow
    top = float(err.max())
    if top == 0.0:
        return 0.0
    return top * float(np.sqrt(np.mean((err / top) ** 2)))


def mae(observed, predicted) -> float:
    y, x = _pair(observed, predicted)
    return float(np.mean(np.abs(y - x)))


@dataclass(frozen=True)
class EvalReport:
    rmse: float
    mae: float
    runtime_seconds: float
    n: int
    model_tag: str = ""
    config_digest: str = ""

    def to_dict(self) -> dict:
        return asdict(self)


def evaluate(observed, predicted, runtime: float = 0.0, model_tag: str = "", config_digest: str = "") -> EvalReport:
    y, x = _pair(observed, predicted)
    r, m = rmse(y, x), mae(y, x)
    # quadratic mean >= arithmetic mean; the slack absorbs rounding when all errors are equal
    assert r >= m * (1.0 - 1e-12), (r, m)
    return EvalReport(r, m, float(runtime), int(y.size), model_tag, config_digest)


def persistence_forecast(previous) -> np.ndarray:
    """Naive forecast: each target is predicted by the value just before it."""
    return np.asarray(previous, dtype=np.float64).copy()

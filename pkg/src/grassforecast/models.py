"""Model configurations and the fit / predict / score path shared by all families.

Every family sees the same pipeline: a chronological split, MinMax
parameters fitted on the training part, and metrics computed after mapping
predictions back to the original units.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import time
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from . import arima
from .arima import ArimaModel, ArimaOrder
from .data import DatasetSplits, MinMaxParams, fit_minmax, transform, window
from .errors import ConfigError, DivergenceDetected, InsufficientHistory
from .metrics import evaluate
from .nn.core import Mlp, MlpConfig, Network, TrainingTrace, train
from .nn.recurrent import RecurrentNet, RnnConfig
from .nn.tcn import TcnConfig, TcnNet

__all__ = [
    "FAMILIES",
    "ArimaConfig",
    "ModelConfig",
    "config_from_dict",
    "config_to_dict",
    "config_digest",
    "build_network",
    "TrainedForecaster",
    "fit_forecaster",
    "predict_split",
    "run_experiment",
    "DIVERGENCE_FACTOR",
]

FAMILIES = ("arima", "lstm", "gru", "mlp", "tcn")

# a validation RMSE this many times the persistence RMSE counts as divergence
DIVERGENCE_FACTOR = 100.0


@dataclass(frozen=True)
class ArimaConfig:
    p: int = 2
    d: int = 1
    q: int = 2
    max_iter: int = arima.MAX_ITER
    tol: float = arima.SIMPLEX_TOL

    family = "arima"

    def __post_init__(self):
        self.order  # validates

    @property
    def order(self) -> ArimaOrder:
        return ArimaOrder(self.p, self.d, self.q)


ModelConfig = Union[ArimaConfig, MlpConfig, RnnConfig, TcnConfig]


def config_from_dict(family: str, values: dict) -> ModelConfig:
    if family not in FAMILIES:
        raise ConfigError(f"unknown model family {family!r}; choose from {FAMILIES}")
    values = dict(values)
    values.pop("family", None)
    if family in ("lstm", "gru"):
        if values.setdefault("cell_kind", family) != family:
            raise ConfigError(f"cell_kind {values['cell_kind']!r} contradicts family {family!r}")
        cls = RnnConfig
    else:
        cls = {"arima": ArimaConfig, "mlp": MlpConfig, "tcn": TcnConfig}[family]
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(values) - known)
    if unknown:
        raise ConfigError(f"unknown {family} settings: {', '.join(unknown)}")
    try:
        return cls(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def config_to_dict(config: ModelConfig) -> dict:
    out = {"family": config.family}
    for f in dataclasses.fields(config):
        v = getattr(config, f.name)
        out[f.name] = list(v) if isinstance(v, tuple) else v
    return out


def config_digest(config: ModelConfig) -> str:
    canonical = json.dumps(config_to_dict(config), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


def build_network(config: ModelConfig) -> Network:
    if isinstance(config, MlpConfig):
        return Mlp(config)
    if isinstance(config, RnnConfig):
        return RecurrentNet(config)
    if isinstance(config, TcnConfig):
        return TcnNet(config)
    raise ConfigError(f"{config.family} is not a neural family")


@dataclass
class TrainedForecaster:
    config: ModelConfig
    scaler: MinMaxParams
    model: Union[ArimaModel, Network]
    trace: Optional[TrainingTrace] = None

    @property
    def family(self) -> str:
        return self.config.family

    @property
    def lag(self) -> int:
        if isinstance(self.config, ArimaConfig):
            return self.config.p + self.config.d
        return self.config.lag

    def one_step(self, values, start: int) -> np.ndarray:
        """Walk-forward one-step predictions (original units) for ``values[start:]``."""
        y = self.scaler.scale(np.asarray(values, dtype=np.float64))
        if isinstance(self.model, ArimaModel):
            preds = arima.one_step_predictions(self.model, y)[start:]
            if np.isnan(preds).any():
                raise InsufficientHistory(f"need {self.lag} observations before position {start}")
        else:
            lag = self.config.lag
            if start < lag:
                raise InsufficientHistory(f"need {lag} observations before position {start}")
            windows = np.lib.stride_tricks.sliding_window_view(y[start - lag : -1], lag)
            preds = self.model.predict(windows)
        return self.scaler.unscale(preds)

    def forecast(self, history, steps: int) -> np.ndarray:
        """Recursive multi-step forecast past the end of ``history`` (original units)."""
        y = self.scaler.scale(np.asarray(history, dtype=np.float64))
        if steps < 1:
            raise ConfigError("steps must be >= 1")
        if isinstance(self.model, ArimaModel):
            return self.scaler.unscale(arima.forecast_recursive(self.model, y, steps))
        lag = self.config.lag
        if y.size < lag:
            raise InsufficientHistory(f"need at least {lag} observations, got {y.size}")
        buf = list(y[-lag:])
        out = []
        for _ in range(steps):
            nxt = float(self.model.predict(np.asarray(buf[-lag:])[None, :])[0])
            out.append(nxt)
            buf.append(nxt)
        return self.scaler.unscale(out)


def fit_forecaster(config: ModelConfig, splits: DatasetSplits) -> TrainedForecaster:
    scaler = fit_minmax(splits.train)
    scaled = splits.map(lambda s: transform(s, scaler))
    if isinstance(config, ArimaConfig):
        model = arima.fit(scaled.train.values, config.order, max_iter=config.max_iter, tol=config.tol)
        return TrainedForecaster(config, scaler, model)
    net = build_network(config)
    trace = train(
        net,
        window(scaled.train, config.lag),
        window(scaled.val, config.lag),
        epochs=config.epochs,
        batch_size=config.batch_size,
        learning_rate=config.learning_rate,
    )
    return TrainedForecaster(config, scaler, net, trace)


def predict_split(fc: TrainedForecaster, splits: DatasetSplits, which: str):
    """``(observed, predicted, previous)`` for one split, all in original units.

    Neural families window the split on its own, so the first ``lag``
    points are targets of no window. ARIMA walks forward through the whole
    series and so predicts every point of the split.
    """
    if which not in ("val", "test"):
        raise ConfigError(f"unknown split {which!r}")
    part = getattr(splits, which)
    if isinstance(fc.model, ArimaModel):
        full = splits.full().values
        start = len(splits.train) + (len(splits.val) if which == "test" else 0)
        stop = start + len(part)
        pred = fc.one_step(full[:stop], start)
        return full[start:stop], pred, full[start - 1 : stop - 1]
    lag = fc.config.lag
    values = part.values
    pred = fc.one_step(values, lag)
    return values[lag:], pred, values[lag - 1 : -1]


def run_experiment(config: ModelConfig, splits: DatasetSplits, *, score_test: bool = True) -> dict:
    """Fit, then score on val (and test). Raises on numerical failure.

    The returned dict carries the fitted forecaster under ``"forecaster"``.
    """
    tag, digest = config.family, config_digest(config)
    t0 = time.perf_counter()
    fc = fit_forecaster(config, splits)
    scored = {}
    for which in ("val", "test") if score_test else ("val",):
        observed, predicted, previous = predict_split(fc, splits, which)
        if not np.all(np.isfinite(predicted)):
            raise DivergenceDetected(f"non-finite {which} predictions")
        scored[which] = (observed, predicted, previous)
    runtime = time.perf_counter() - t0

    result = {"forecaster": fc, "runtime_seconds": runtime, "metrics": {}, "baseline": {}}
    for which, (observed, predicted, previous) in scored.items():
        result["metrics"][which] = evaluate(observed, predicted, runtime, tag, digest)
        result["baseline"][which] = evaluate(observed, previous, 0.0, "persistence", "")
    val, base = result["metrics"]["val"], result["baseline"]["val"]
    if val.rmse > DIVERGENCE_FACTOR * base.rmse:
        raise DivergenceDetected(
            f"validation RMSE {val.rmse:.4g} exceeds {DIVERGENCE_FACTOR:g}x persistence ({base.rmse:.4g})"
        )
    if score_test:
        result["test_predictions"] = scored["test"][1]
    return result

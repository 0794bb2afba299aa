"""Versioned model files.

A model file is one JSON document. Arrays are stored as base64 of their
little-endian float64 bytes, scalars through ``repr``-exact JSON floats, so
loading reproduces every parameter bit for bit. Nothing time-dependent is
written: identical models give identical bytes.
"""

from __future__ import annotations

import base64
import json
from pathlib import Path

import numpy as np

from .arima import ArimaModel
from .data import MinMaxParams
from .errors import ConfigError
from .models import TrainedForecaster, build_network, config_digest, config_from_dict, config_to_dict
from .nn.core import TrainingTrace

FORMAT = "grassforecast-model"
FORMAT_VERSION = 1

__all__ = ["dumps", "loads", "save", "load", "FORMAT_VERSION"]


def _encode(arr) -> dict:
    a = np.ascontiguousarray(np.asarray(arr, dtype="<f8"))
    return {"shape": list(a.shape), "data": base64.b64encode(a.tobytes()).decode("ascii")}


def _decode(blob: dict) -> np.ndarray:
    raw = base64.b64decode(blob["data"])
    return np.frombuffer(raw, dtype="<f8").astype(np.float64).reshape(blob["shape"])


def dumps(fc: TrainedForecaster) -> str:
    doc = {
        "format": FORMAT,
        "version": FORMAT_VERSION,
        "family": fc.family,
        "config": config_to_dict(fc.config),
        "config_digest": config_digest(fc.config),
        "scaler": {"min": fc.scaler.min, "max": fc.scaler.max},
    }
    if isinstance(fc.model, ArimaModel):
        m = fc.model
        doc["params"] = {
            "c": _encode([m.c]),
            "phi": _encode(m.phi),
            "theta": _encode(m.theta),
            "residuals": _encode(m.residuals),
        }
        doc["sigma2"] = m.sigma2
        doc["iterations"] = m.iterations
    else:
        doc["params"] = {k: _encode(v) for k, v in fc.model.params.items()}
    if fc.trace is not None:
        doc["trace"] = fc.trace.to_dict()
    return json.dumps(doc, sort_keys=True, indent=1) + "\n"


def loads(text: str) -> TrainedForecaster:
    doc = json.loads(text)
    if doc.get("format") != FORMAT:
        raise ConfigError("not a grassforecast model file")
    if doc.get("version") != FORMAT_VERSION:
        raise ConfigError(f"unsupported model file version {doc.get('version')!r}")
    config = config_from_dict(doc["family"], doc["config"])
    if config_digest(config) != doc["config_digest"]:
        raise ConfigError("config digest mismatch; file is corrupt or was edited")
    scaler = MinMaxParams(doc["scaler"]["min"], doc["scaler"]["max"])
    params = {k: _decode(v) for k, v in doc["params"].items()}
    trace = TrainingTrace.from_dict(doc["trace"]) if "trace" in doc else None
    if doc["family"] == "arima":
        model = ArimaModel(
            config.order,
            float(params["c"][0]),
            params["phi"],
            params["theta"],
            residuals=params["residuals"],
            sigma2=doc["sigma2"],
            iterations=doc["iterations"],
        )
    else:
        model = build_network(config)
        if set(params) != set(model.params):
            raise ConfigError("parameter names do not match the configured architecture")
        model.set_params(params)
    return TrainedForecaster(config, scaler, model, trace)


def save(fc: TrainedForecaster, path) -> None:
    Path(path).write_text(dumps(fc), encoding="utf-8")


def load(path) -> TrainedForecaster:
    return loads(Path(path).read_text(encoding="utf-8"))

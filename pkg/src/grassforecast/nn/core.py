"""Feed-forward building blocks, MSE loss, SGD training, and the MLP forecaster.

Every network in this package follows the same small protocol:

* ``params`` is an ordered ``dict[str, ndarray]`` that the optimiser mutates
  in place;
* ``forward(X)`` maps a batch of windows ``(B, lag)`` to ``(B,)`` outputs and
  returns a cache for ``backward``;
* ``backward(cache, dout)`` returns gradients keyed like ``params``.

Shapes use the row-vector convention: a dense layer computes ``H @ W.T + b``
with ``W`` of shape ``(out, in)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ..errors import DimensionMismatch, DivergenceDetected, LengthMismatch, ConfigError

__all__ = [
    "ACTIVATIONS",
    "activate",
    "activation_grad",
    "glorot_uniform",
    "mse_loss",
    "DenseLayer",
    "dense_forward",
    "dense_backward",
    "Network",
    "MlpConfig",
    "Mlp",
    "backward",
    "TrainingTrace",
    "sgd_step",
    "train",
    "mlp_predict",
]


def _sigmoid(a):
    # split by sign so exp never overflows
    out = np.empty_like(a)
    pos = a >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-a[pos]))
    ea = np.exp(a[~pos])
    out[~pos] = ea / (1.0 + ea)
    return out


# name -> (f(a), df/da expressed through (a, f(a)))
ACTIVATIONS: dict[str, tuple[Callable, Callable]] = {
    "relu": (lambda a: np.maximum(a, 0.0), lambda a, h: (a > 0).astype(a.dtype)),
    "sigmoid": (_sigmoid, lambda a, h: h * (1.0 - h)),
    "tanh": (np.tanh, lambda a, h: 1.0 - h * h),
    "linear": (lambda a: a, lambda a, h: np.ones_like(a)),
}


def _check_activation(name):
    if name not in ACTIVATIONS:
        raise ConfigError(f"unknown activation {name!r}; choose from {sorted(ACTIVATIONS)}")


def activate(name: str, a: np.ndarray) -> np.ndarray:
    _check_activation(name)
    return ACTIVATIONS[name][0](np.asarray(a, dtype=np.float64))


def activation_grad(name: str, a: np.ndarray, h: np.ndarray) -> np.ndarray:
    return ACTIVATIONS[name][1](a, h)


def glorot_uniform(rng: np.random.Generator, shape, fan_in: int, fan_out: int) -> np.ndarray:
    limit = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


def mse_loss(targets, outputs) -> float:
    y = np.asarray(targets, dtype=np.float64).reshape(-1)
    o = np.asarray(outputs, dtype=np.float64).reshape(-1)
    if y.shape != o.shape:
        raise LengthMismatch(f"{y.size} targets vs {o.size} outputs")
    if y.size == 0:
        raise LengthMismatch("mse of empty vectors is undefined")
    return float(np.mean((y - o) ** 2))


# ----------------------------------------------------------------------- dense


@dataclass
class DenseLayer:
    weights: np.ndarray
    bias: np.ndarray
    activation: str = "linear"

    def __post_init__(self):
        self.weights = np.atleast_2d(np.asarray(self.weights, dtype=np.float64))
        self.bias = np.asarray(self.bias, dtype=np.float64).reshape(-1)
        _check_activation(self.activation)
        if self.bias.size != self.weights.shape[0]:
            raise DimensionMismatch(
                f"bias of length {self.bias.size} for {self.weights.shape[0]} outputs"
            )

    @property
    def n_in(self) -> int:
        return self.weights.shape[1]

    @property
    def n_out(self) -> int:
        return self.weights.shape[0]


def dense_forward(layer: DenseLayer, inputs):
    """Return ``(h, a)``: activated output and the cached pre-activation.

    Accepts a single vector ``(in,)`` or a batch ``(B, in)``.
    """
    x = np.asarray(inputs, dtype=np.float64)
    if x.shape[-1] != layer.n_in:
        raise DimensionMismatch(f"layer expects {layer.n_in} inputs, got {x.shape[-1]}")
    a = x @ layer.weights.T + layer.bias
    return activate(layer.activation, a), a


def dense_backward(layer: DenseLayer, x, a, h, dh):
    """Gradients ``(dW, db, dx)`` for a batch, given upstream ``dh``."""
    da = dh * activation_grad(layer.activation, a, h)
    return da.T @ x, da.sum(axis=0), da @ layer.weights


# --------------------------------------------------------------------- network


class Network:
    """Base class; subclasses fill ``params`` and implement forward/backward."""

    lag: int
    params: dict

    def forward(self, X):
        raise NotImplementedError

    def backward(self, cache, dout):
        raise NotImplementedError

    def _check_inputs(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X[None, :]
        if X.ndim != 2 or X.shape[1] != self.lag:
            raise DimensionMismatch(f"expected windows of length {self.lag}, got shape {X.shape}")
        return X

    def predict(self, X) -> np.ndarray:
        out, _ = self.forward(X)
        return out

    def loss_and_grads(self, X, y):
        y = np.asarray(y, dtype=np.float64).reshape(-1)
        out, cache = self.forward(X)
        if out.shape != y.shape:
            raise LengthMismatch(f"{y.size} targets for {out.size} outputs")
        loss = float(np.mean((y - out) ** 2))
        dout = 2.0 * (out - y) / y.size
        return loss, self.backward(cache, dout)

    def n_parameters(self) -> int:
        return int(sum(p.size for p in self.params.values()))

    def copy_params(self) -> dict:
        return {k: v.copy() for k, v in self.params.items()}

    def set_params(self, params: dict) -> None:
        for key, value in params.items():
            target = self.params[key]
            value = np.asarray(value, dtype=np.float64)
            if value.shape != target.shape:
                raise DimensionMismatch(f"{key}: expected shape {target.shape}, got {value.shape}")
            target[...] = value


@dataclass(frozen=True)
class MlpConfig:
    layer_sizes: tuple = (10,)
    lag: int = 2
    batch_size: int = 32
    epochs: int = 50
    learning_rate: float = 1e-2
    seed: int = 0
    activation: str = "relu"

    family = "mlp"

    def __post_init__(self):
        object.__setattr__(self, "layer_sizes", tuple(int(n) for n in self.layer_sizes))
        # an empty tuple is a single linear neuron on the window
        if self.layer_sizes and min(self.layer_sizes) < 1:
            raise ConfigError("layer widths must be positive")
        if self.epochs < 1 or self.batch_size < 1 or self.lag < 1:
            raise ConfigError("epochs, batch_size and lag must all be >= 1")
        _check_activation(self.activation)

    @property
    def n_layers(self) -> int:
        return len(self.layer_sizes)


class Mlp(Network):
    """Hidden dense layers with a shared activation, then one linear output unit."""

    def __init__(self, config: MlpConfig):
        self.config = config
        self.lag = config.lag
        rng = np.random.default_rng(config.seed)
        self.params = {}
        widths = [config.lag, *config.layer_sizes, 1]
        for i, (n_in, n_out) in enumerate(zip(widths, widths[1:])):
            self.params[f"W{i}"] = glorot_uniform(rng, (n_out, n_in), n_in, n_out)
            self.params[f"b{i}"] = np.zeros(n_out)
        self.n_dense = len(widths) - 1

    def layers(self) -> list[DenseLayer]:
        """Views onto ``params``; mutating a layer mutates the network."""
        out = []
        for i in range(self.n_dense):
            act = "linear" if i == self.n_dense - 1 else self.config.activation
            layer = DenseLayer.__new__(DenseLayer)
            layer.weights, layer.bias, layer.activation = self.params[f"W{i}"], self.params[f"b{i}"], act
            out.append(layer)
        return out

    def forward(self, X):
        h = self._check_inputs(X)
        cache = []
        for layer in self.layers():
            h_next, a = dense_forward(layer, h)
            cache.append((layer, h, a, h_next))
            h = h_next
        return h[:, 0], cache

    def backward(self, cache, dout):
        grads = {}
        dh = np.asarray(dout, dtype=np.float64).reshape(-1, 1)
        for i in reversed(range(len(cache))):
            layer, x, a, h = cache[i]
            dW, db, dh = dense_backward(layer, x, a, h, dh)
            grads[f"W{i}"], grads[f"b{i}"] = dW, db
        return {k: grads[k] for k in self.params}


def backward(network: Network, X, y) -> dict:
    """Analytic gradient of the batch MSE with respect to every parameter."""
    return network.loss_and_grads(X, y)[1]


def mlp_predict(network: Mlp, window) -> float:
    w = np.asarray(window, dtype=np.float64).reshape(-1)
    if w.size != network.lag:
        raise DimensionMismatch(f"window of length {w.size}, network lag is {network.lag}")
    return float(network.predict(w[None, :])[0])


# ---------------------------------------------------------------------- training


@dataclass
class TrainingTrace:
    train_loss_per_epoch: list = field(default_factory=list)
    val_loss_per_epoch: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "train_loss": [float(v) for v in self.train_loss_per_epoch],
            "val_loss": [float(v) for v in self.val_loss_per_epoch],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TrainingTrace":
        return cls(list(d["train_loss"]), list(d["val_loss"]))


def sgd_step(params: dict, grads: dict, learning_rate: float) -> None:
    for key, g in grads.items():
        params[key] -= learning_rate * g


def train(network: Network, train_set, val_set=None, *, epochs: int, batch_size: int, learning_rate: float) -> TrainingTrace:
    """Plain mini-batch SGD on MSE; batches taken in chronological order.

    The per-epoch training loss is the sample-weighted mean of the batch
    losses seen during that epoch; validation loss is measured after it.
    """
    X, y = np.asarray(train_set.inputs), np.asarray(train_set.targets)
    n = y.size
    if n == 0:
        raise LengthMismatch("empty training set")
    trace = TrainingTrace()
    # overflow is reported below as DivergenceDetected, not as numpy warnings
    with np.errstate(over="ignore", invalid="ignore"):
        for epoch in range(epochs):
            total = 0.0
            for start in range(0, n, batch_size):
                xb, yb = X[start : start + batch_size], y[start : start + batch_size]
                loss, grads = network.loss_and_grads(xb, yb)
                if not np.isfinite(loss) or not all(np.all(np.isfinite(g)) for g in grads.values()):
                    raise DivergenceDetected(f"non-finite loss or gradient in epoch {epoch + 1}")
                sgd_step(network.params, grads, learning_rate)
                total += loss * yb.size
            trace.train_loss_per_epoch.append(total / n)
            if val_set is not None and len(val_set):
                val_loss = mse_loss(val_set.targets, network.predict(val_set.inputs))
                if not np.isfinite(val_loss):
                    raise DivergenceDetected(f"non-finite validation loss in epoch {epoch + 1}")
                trace.val_loss_per_epoch.append(val_loss)
            else:
                trace.val_loss_per_epoch.append(float("nan"))
    return trace

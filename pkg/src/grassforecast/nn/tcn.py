"""Temporal convolutional network: dilated causal convolutions in residual blocks.

A convolution with kernel size ``k`` and dilation ``d`` computes, per
output channel,

    out[t] = bias + sum_{i=0}^{k-1} x[t - d*i] @ W[i]

with ``x[t] = 0`` for ``t < 0``, which is the same as left-padding with
``(k-1)*d`` zeros. Output length equals input length.

A residual block holds ``convs_per_block`` such convolutions (activation
after each), all sharing one dilation, and returns
``act(skip(x) + F(x))``. ``skip`` is the identity, or a 1x1 projection
when channel counts differ.

Block layout: ``dilations`` is walked cyclically to produce ``blocks``
residual blocks (so ``blocks=3`` with ``[1, 3, 6, 12, 24]`` gives dilations
1, 3, 6), and that stack is repeated ``stacks`` times. The forecast is a
linear read of the last timestep's channel vector.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..errors import ConfigError, DimensionMismatch
from .core import Network, activate, activation_grad, glorot_uniform, _check_activation

__all__ = [
    "TcnConfig",
    "DilatedConvLayer",
    "ResidualBlock",
    "TcnNet",
    "causal_pad",
    "dilated_conv",
    "residual_block_forward",
    "receptive_field",
    "tcn_forward",
]


@dataclass(frozen=True)
class TcnConfig:
    stacks: int = 1
    filters: int = 64
    kernel_size: int = 4
    blocks: int = 3
    dilations: tuple = (1, 3, 6, 12, 24)
    lag: int = 2
    epochs: int = 30
    batch_size: int = 32
    learning_rate: float = 1e-2
    seed: int = 0
    activation: str = "relu"
    convs_per_block: int = 2

    family = "tcn"

    def __post_init__(self):
        dil = tuple(int(d) for d in self.dilations)
        object.__setattr__(self, "dilations", dil)
        if not dil or dil[0] != 1 or any(b <= a for a, b in zip(dil, dil[1:])):
            raise ConfigError(f"dilations must start at 1 and strictly increase, got {dil}")
        for name in ("stacks", "filters", "kernel_size", "blocks", "lag", "epochs", "batch_size", "convs_per_block"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        _check_activation(self.activation)

    @property
    def n_layers(self) -> int:
        return self.stacks

    def block_dilations(self) -> list[int]:
        """Dilation of every residual block, input side first."""
        per_stack = [self.dilations[i % len(self.dilations)] for i in range(self.blocks)]
        return per_stack * self.stacks


# ---------------------------------------------------------------- primitives


def causal_pad(sequence, k: int, d: int) -> np.ndarray:
    """Prepend ``(k-1)*d`` zeros along the time axis (axis 0 for 1-D/2-D input, 1 for 3-D)."""
    x = np.asarray(sequence, dtype=np.float64)
    n = (k - 1) * d
    axis = 1 if x.ndim == 3 else 0
    widths = [(0, 0)] * x.ndim
    widths[axis] = (n, 0)
    return np.pad(x, widths)


@dataclass
class DilatedConvLayer:
    """Kernel ``weights`` has shape ``(k, in_channels, filters)``."""

    weights: np.ndarray
    bias: np.ndarray
    dilation: int = 1

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        if w.ndim == 1:
            w = w[:, None, None]
        self.weights = w
        self.bias = np.asarray(self.bias, dtype=np.float64).reshape(-1)
        if self.weights.shape[0] < 1 or self.dilation < 1:
            raise ConfigError("kernel size and dilation must be >= 1")
        if self.bias.size != self.weights.shape[2]:
            raise DimensionMismatch("one bias per filter required")

    @property
    def kernel_size(self) -> int:
        return self.weights.shape[0]

    @property
    def filters(self) -> int:
        return self.weights.shape[2]


def _conv_fwd(x, W, b, d):
    # x: (B, L, Cin); taps reaching before t=0 only see padding and are skipped
    B, L, _ = x.shape
    out = np.broadcast_to(b, (B, L, W.shape[2])).copy()
    for i in range(W.shape[0]):
        s = d * i
        if s >= L:
            break
        out[:, s:, :] += x[:, : L - s, :] @ W[i]
    return out


def _conv_bwd(x, W, d, dout):
    B, L, Cin = x.shape
    dW = np.zeros_like(W)
    dx = np.zeros_like(x)
    for i in range(W.shape[0]):
        s = d * i
        if s >= L:
            break
        xs = x[:, : L - s, :].reshape(-1, Cin)
        ds = dout[:, s:, :].reshape(-1, W.shape[2])
        dW[i] = xs.T @ ds
        dx[:, : L - s, :] += dout[:, s:, :] @ W[i].T
    return dW, dout.sum(axis=(0, 1)), dx


def _as_batch(sequence):
    x = np.asarray(sequence, dtype=np.float64)
    ndim = x.ndim
    if ndim == 1:
        x = x[None, :, None]
    elif ndim == 2:
        x = x[None, :, :]
    return x, ndim


def _restore(y, ndim):
    if ndim == 1:
        return y[0, :, 0] if y.shape[2] == 1 else y[0]
    if ndim == 2:
        return y[0]
    return y


def dilated_conv(layer: DilatedConvLayer, sequence) -> np.ndarray:
    """Causal dilated convolution; accepts ``(L,)``, ``(L, C)`` or ``(B, L, C)``."""
    x, ndim = _as_batch(sequence)
    if x.shape[2] != layer.weights.shape[1]:
        raise DimensionMismatch(f"layer expects {layer.weights.shape[1]} channels, got {x.shape[2]}")
    return _restore(_conv_fwd(x, layer.weights, layer.bias, layer.dilation), ndim)


@dataclass
class ResidualBlock:
    conv_layers: list
    activation: str = "relu"
    projection: Optional[tuple] = None  # (W (Cin, F), b (F,))

    def __post_init__(self):
        _check_activation(self.activation)
        if len({c.dilation for c in self.conv_layers}) != 1:
            raise ConfigError("all convolutions in a block share one dilation")
        c_in = self.conv_layers[0].weights.shape[1]
        if c_in != self.conv_layers[-1].filters and self.projection is None:
            raise DimensionMismatch("channel change inside a block needs a 1x1 projection")


def _block_fwd(x, convs, proj, act):
    h = x
    conv_cache = []
    for W, b, d in convs:
        a = _conv_fwd(h, W, b, d)
        out = activate(act, a)
        conv_cache.append((h, a, out, W, d))
        h = out
    res = x if proj is None else x @ proj[0] + proj[1]
    s = res + h
    y = activate(act, s)
    return y, (x, conv_cache, proj, s, y)


def _block_bwd(cache, dy, act):
    x, conv_cache, proj, s, y = cache
    ds = dy * activation_grad(act, s, y)
    conv_grads = []
    dh = ds
    for h_in, a, out, W, d in reversed(conv_cache):
        da = dh * activation_grad(act, a, out)
        dW, db, dh = _conv_bwd(h_in, W, d, da)
        conv_grads.append((dW, db))
    conv_grads.reverse()
    if proj is None:
        return conv_grads, None, dh + ds
    Cin = x.shape[2]
    dPW = x.reshape(-1, Cin).T @ ds.reshape(-1, ds.shape[2])
    dPb = ds.sum(axis=(0, 1))
    return conv_grads, (dPW, dPb), dh + ds @ proj[0].T


def residual_block_forward(block: ResidualBlock, sequence) -> np.ndarray:
    x, ndim = _as_batch(sequence)
    convs = [(c.weights, c.bias, c.dilation) for c in block.conv_layers]
    if x.shape[2] != convs[0][0].shape[1]:
        raise DimensionMismatch(f"block expects {convs[0][0].shape[1]} channels, got {x.shape[2]}")
    y, _ = _block_fwd(x, convs, block.projection, block.activation)
    return _restore(y, ndim)


def receptive_field(config: TcnConfig) -> int:
    """Number of trailing inputs that can influence the last output position."""
    return 1 + config.convs_per_block * (config.kernel_size - 1) * sum(config.block_dilations())


# ------------------------------------------------------------------- network


class TcnNet(Network):
    def __init__(self, config: TcnConfig):
        self.config = config
        self.lag = config.lag
        rng = np.random.default_rng(config.seed)
        k, F = config.kernel_size, config.filters
        self.params = {}
        c_in = 1
        for j, _ in enumerate(config.block_dilations()):
            ch = c_in
            for m in range(config.convs_per_block):
                self.params[f"B{j}.conv{m}.W"] = glorot_uniform(rng, (k, ch, F), k * ch, k * F)
                self.params[f"B{j}.conv{m}.b"] = np.zeros(F)
                ch = F
            if c_in != F:
                self.params[f"B{j}.proj.W"] = glorot_uniform(rng, (c_in, F), c_in, F)
                self.params[f"B{j}.proj.b"] = np.zeros(F)
            c_in = F
        self.params["out.W"] = glorot_uniform(rng, (1, F), F, 1)
        self.params["out.b"] = np.zeros(1)

    def _block_parts(self, j, d):
        convs = [
            (self.params[f"B{j}.conv{m}.W"], self.params[f"B{j}.conv{m}.b"], d)
            for m in range(self.config.convs_per_block)
        ]
        proj = None
        if f"B{j}.proj.W" in self.params:
            proj = (self.params[f"B{j}.proj.W"], self.params[f"B{j}.proj.b"])
        return convs, proj

    def residual_blocks(self) -> list[ResidualBlock]:
        """Block objects sharing this network's parameter arrays."""
        blocks = []
        for j, d in enumerate(self.config.block_dilations()):
            convs, proj = self._block_parts(j, d)
            layers = [DilatedConvLayer(W, b, d) for W, b, _ in convs]
            blocks.append(ResidualBlock(layers, self.config.activation, proj))
        return blocks

    def forward_sequence(self, sequence):
        """Top-block channel outputs at every position, shape ``(B, L, filters)``."""
        x = np.asarray(sequence, dtype=np.float64)
        if x.ndim == 1:
            x = x[None, :]
        h = x[:, :, None]
        caches = []
        for j, d in enumerate(self.config.block_dilations()):
            convs, proj = self._block_parts(j, d)
            h, cache = _block_fwd(h, convs, proj, self.config.activation)
            caches.append(cache)
        return h, caches

    def forward(self, X):
        X = self._check_inputs(X)
        h, caches = self.forward_sequence(X)
        last = h[:, -1, :]
        out = last @ self.params["out.W"][0] + self.params["out.b"][0]
        return out, (caches, h.shape, last)

    def backward(self, cache, dout):
        caches, shape, last = cache
        dout = np.asarray(dout, dtype=np.float64).reshape(-1)
        grads = {}
        dh = np.zeros(shape)
        dh[:, -1, :] = np.outer(dout, self.params["out.W"][0])
        for j in reversed(range(len(caches))):
            conv_grads, proj_grads, dh = _block_bwd(caches[j], dh, self.config.activation)
            for m, (dW, db) in enumerate(conv_grads):
                grads[f"B{j}.conv{m}.W"], grads[f"B{j}.conv{m}.b"] = dW, db
            if proj_grads is not None:
                grads[f"B{j}.proj.W"], grads[f"B{j}.proj.b"] = proj_grads
        grads["out.W"] = (dout @ last)[None, :]
        grads["out.b"] = np.array([dout.sum()])
        return {k: grads[k] for k in self.params}


def tcn_forward(config: TcnConfig, params: Optional[dict], window) -> float:
    net = TcnNet(config)
    if params is not None:
        net.set_params(params)
    w = np.asarray(window, dtype=np.float64).reshape(1, -1)
    return float(net.predict(w)[0])

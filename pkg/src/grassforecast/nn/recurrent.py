"""LSTM and GRU forecasters unrolled over the lag window.

Each lag value is one timestep of a 1-dimensional input. Layers can be
stacked; layer ``k`` reads the full hidden sequence of layer ``k - 1`` and a
single linear unit reads the top layer's final hidden state. Hidden and
cell states start at zero for every window.

Standard cells (default)::

    i = sig(W_i x + U_i h + b_i)     f = sig(W_f x + U_f h + b_f)
    o = sig(W_o x + U_o h + b_o)     g = tanh(W_g x + U_g h + b_g)
    c' = f * c + i * g               h' = o * tanh(c')

    z = sig(W_z x + U_z h + b_z)     r = sig(W_r x + U_r h + b_r)
    g = tanh(W_g x + U_g (r * h) + b_g)
    h' = z * h + (1 - z) * g

``paper_literal=True`` flips the sign of the biases of i, o, g (LSTM) and
z (GRU) and computes the LSTM output as ``o * tanh(g)``, so the emitted
hidden state no longer reads the cell state at all.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..errors import ConfigError, DimensionMismatch
from .core import Network, _sigmoid, glorot_uniform

__all__ = [
    "LSTM_GATES",
    "GRU_GATES",
    "LstmState",
    "RnnConfig",
    "RecurrentNet",
    "lstm_step",
    "gru_step",
    "rnn_forward",
]

LSTM_GATES = ("i", "f", "o", "g")
GRU_GATES = ("z", "r", "g")

# bias sign per gate in the literal transcription
_LITERAL_BIAS_SIGN = {
    "lstm": {"i": -1.0, "f": 1.0, "o": -1.0, "g": -1.0},
    "gru": {"z": -1.0, "r": 1.0, "g": 1.0},
}


def _bias_sign(kind: str, gate: str, paper_literal: bool) -> float:
    return _LITERAL_BIAS_SIGN[kind][gate] if paper_literal else 1.0


@dataclass
class LstmState:
    h: np.ndarray
    c: np.ndarray
    gates: dict = field(default_factory=dict)


def _pre(params: dict, gate: str, x, h, sign: float):
    return x @ params[f"W_{gate}"].T + h @ params[f"U_{gate}"].T + sign * params[f"b_{gate}"]


def _check_cell(params: dict, gates, x, h):
    hidden = params[f"U_{gates[0]}"].shape[0]
    n_in = params[f"W_{gates[0]}"].shape[1]
    if x.shape[-1] != n_in:
        raise DimensionMismatch(f"cell expects inputs of size {n_in}, got {x.shape[-1]}")
    if h.shape[-1] != hidden:
        raise DimensionMismatch(f"cell has {hidden} hidden units, state has {h.shape[-1]}")


def lstm_step(params: dict, x_t, prev: LstmState, paper_literal: bool = False) -> LstmState:
    """One LSTM update. ``params`` holds ``W_*``, ``U_*``, ``b_*`` for gates i, f, o, g."""
    x = np.atleast_1d(np.asarray(x_t, dtype=np.float64))
    h_prev = np.asarray(prev.h, dtype=np.float64)
    c_prev = np.asarray(prev.c, dtype=np.float64)
    _check_cell(params, LSTM_GATES, x, h_prev)
    s = {g: _bias_sign("lstm", g, paper_literal) for g in LSTM_GATES}
    i = _sigmoid(_pre(params, "i", x, h_prev, s["i"]))
    f = _sigmoid(_pre(params, "f", x, h_prev, s["f"]))
    o = _sigmoid(_pre(params, "o", x, h_prev, s["o"]))
    g = np.tanh(_pre(params, "g", x, h_prev, s["g"]))
    c = f * c_prev + i * g
    h = o * np.tanh(g if paper_literal else c)
    return LstmState(h, c, {"i": i, "f": f, "o": o, "g": g})


def gru_step(params: dict, x_t, h_prev, paper_literal: bool = False, return_gates: bool = False):
    x = np.atleast_1d(np.asarray(x_t, dtype=np.float64))
    h_prev = np.asarray(h_prev, dtype=np.float64)
    _check_cell(params, GRU_GATES, x, h_prev)
    z = _sigmoid(_pre(params, "z", x, h_prev, _bias_sign("gru", "z", paper_literal)))
    r = _sigmoid(_pre(params, "r", x, h_prev, 1.0))
    g = np.tanh(x @ params["W_g"].T + (r * h_prev) @ params["U_g"].T + params["b_g"])
    h = z * h_prev + (1.0 - z) * g
    if return_gates:
        return h, {"z": z, "r": r, "g": g}
    return h


@dataclass(frozen=True)
class RnnConfig:
    cell_kind: str = "lstm"
    hidden_sizes: tuple = (10,)
    lag: int = 3
    batch_size: int = 32
    epochs: int = 50
    learning_rate: float = 1e-2
    seed: int = 0
    paper_literal: bool = False

    def __post_init__(self):
        object.__setattr__(self, "hidden_sizes", tuple(int(n) for n in self.hidden_sizes))
        if self.cell_kind not in ("lstm", "gru"):
            raise ConfigError(f"cell_kind must be 'lstm' or 'gru', got {self.cell_kind!r}")
        if not self.hidden_sizes or min(self.hidden_sizes) < 1:
            raise ConfigError("hidden_sizes must be a non-empty list of positive widths")
        if self.epochs < 1 or self.batch_size < 1 or self.lag < 1:
            raise ConfigError("epochs, batch_size and lag must all be >= 1")

    @property
    def family(self) -> str:
        return self.cell_kind

    @property
    def n_layers(self) -> int:
        return len(self.hidden_sizes)


class RecurrentNet(Network):
    def __init__(self, config: RnnConfig):
        self.config = config
        self.lag = config.lag
        self.kind = config.cell_kind
        self.gates = LSTM_GATES if self.kind == "lstm" else GRU_GATES
        self.literal = config.paper_literal
        rng = np.random.default_rng(config.seed)
        self.params = {}
        n_in = 1
        for layer, hidden in enumerate(config.hidden_sizes):
            for g in self.gates:
                self.params[f"L{layer}.W_{g}"] = glorot_uniform(rng, (hidden, n_in), n_in, hidden)
            for g in self.gates:
                self.params[f"L{layer}.U_{g}"] = glorot_uniform(rng, (hidden, hidden), hidden, hidden)
            for g in self.gates:
                self.params[f"L{layer}.b_{g}"] = np.zeros(hidden)
            n_in = hidden
        self.params["out.W"] = glorot_uniform(rng, (1, n_in), n_in, 1)
        self.params["out.b"] = np.zeros(1)

    def layer_params(self, layer: int) -> dict:
        prefix = f"L{layer}."
        return {k[len(prefix):]: v for k, v in self.params.items() if k.startswith(prefix)}

    # -- forward -----------------------------------------------------------

    def forward(self, X):
        X = self._check_inputs(X)
        B, T = X.shape
        seq = X[:, :, None]
        caches = []
        for layer, hidden in enumerate(self.config.hidden_sizes):
            p = self.layer_params(layer)
            h = np.zeros((B, hidden))
            c = np.zeros((B, hidden))
            steps, outs = [], []
            for t in range(T):
                x = seq[:, t, :]
                if self.kind == "lstm":
                    st = lstm_step(p, x, LstmState(h, c), self.literal)
                    steps.append((x, h, c, st))
                    h, c = st.h, st.c
                else:
                    h_new, gates = gru_step(p, x, h, self.literal, return_gates=True)
                    steps.append((x, h, gates))
                    h = h_new
                outs.append(h)
            caches.append(steps)
            seq = np.stack(outs, axis=1)
        h_top = seq[:, -1, :]
        out = h_top @ self.params["out.W"][0] + self.params["out.b"][0]
        return out, (caches, h_top)

    # -- backward ----------------------------------------------------------

    def _lstm_layer_backward(self, p, steps, dh_seq, grads, prefix):
        B, T, H = dh_seq.shape
        s = {g: _bias_sign("lstm", g, self.literal) for g in LSTM_GATES}
        dx_seq = np.zeros((B, T, p["W_i"].shape[1]))
        dh_next = np.zeros((B, H))
        dc_next = np.zeros((B, H))
        for t in reversed(range(T)):
            x, h_prev, c_prev, st = steps[t]
            i, f, o, g = (st.gates[k] for k in LSTM_GATES)
            dh = dh_seq[:, t, :] + dh_next
            if self.literal:
                tg = np.tanh(g)
                do = dh * tg
                dg = dc_next * i + dh * o * (1.0 - tg * tg)
                dc = dc_next
            else:
                tc = np.tanh(st.c)
                do = dh * tc
                dc = dh * o * (1.0 - tc * tc) + dc_next
                dg = dc * i
            di = dc * g
            df = dc * c_prev
            da = {
                "i": di * i * (1.0 - i),
                "f": df * f * (1.0 - f),
                "o": do * o * (1.0 - o),
                "g": dg * (1.0 - g * g),
            }
            dh_next = np.zeros((B, H))
            dx = np.zeros_like(x)
            for k in LSTM_GATES:
                grads[f"{prefix}W_{k}"] += da[k].T @ x
                grads[f"{prefix}U_{k}"] += da[k].T @ h_prev
                grads[f"{prefix}b_{k}"] += s[k] * da[k].sum(axis=0)
                dh_next += da[k] @ p[f"U_{k}"]
                dx += da[k] @ p[f"W_{k}"]
            dc_next = dc * f
            dx_seq[:, t, :] = dx
        return dx_seq

    def _gru_layer_backward(self, p, steps, dh_seq, grads, prefix):
        B, T, H = dh_seq.shape
        sz = _bias_sign("gru", "z", self.literal)
        dx_seq = np.zeros((B, T, p["W_z"].shape[1]))
        dh_next = np.zeros((B, H))
        for t in reversed(range(T)):
            x, h_prev, gates = steps[t]
            z, r, g = gates["z"], gates["r"], gates["g"]
            dh = dh_seq[:, t, :] + dh_next
            dz = dh * (h_prev - g)
            dg = dh * (1.0 - z)
            dh_prev = dh * z
            dag = dg * (1.0 - g * g)
            rh = r * h_prev
            grads[f"{prefix}W_g"] += dag.T @ x
            grads[f"{prefix}U_g"] += dag.T @ rh
            grads[f"{prefix}b_g"] += dag.sum(axis=0)
            drh = dag @ p["U_g"]
            dr = drh * h_prev
            dh_prev += drh * r
            daz = dz * z * (1.0 - z)
            dar = dr * r * (1.0 - r)
            grads[f"{prefix}W_z"] += daz.T @ x
            grads[f"{prefix}U_z"] += daz.T @ h_prev
            grads[f"{prefix}b_z"] += sz * daz.sum(axis=0)
            grads[f"{prefix}W_r"] += dar.T @ x
            grads[f"{prefix}U_r"] += dar.T @ h_prev
            grads[f"{prefix}b_r"] += dar.sum(axis=0)
            dh_prev += daz @ p["U_z"] + dar @ p["U_r"]
            dx_seq[:, t, :] = daz @ p["W_z"] + dar @ p["W_r"] + dag @ p["W_g"]
            dh_next = dh_prev
        return dx_seq

    def backward(self, cache, dout):
        caches, h_top = cache
        dout = np.asarray(dout, dtype=np.float64).reshape(-1)
        grads = {k: np.zeros_like(v) for k, v in self.params.items()}
        grads["out.W"] = (dout @ h_top)[None, :]
        grads["out.b"] = np.array([dout.sum()])
        B = dout.size
        T = self.lag
        top = len(self.config.hidden_sizes) - 1
        dh_seq = np.zeros((B, T, self.config.hidden_sizes[top]))
        dh_seq[:, -1, :] = np.outer(dout, self.params["out.W"][0])
        layer_backward = self._lstm_layer_backward if self.kind == "lstm" else self._gru_layer_backward
        for layer in reversed(range(top + 1)):
            dh_seq = layer_backward(self.layer_params(layer), caches[layer], dh_seq, grads, f"L{layer}.")
        return grads


def rnn_forward(config: RnnConfig, params: Optional[dict], window) -> float:
    """Forecast one step from a single window, optionally with explicit parameters."""
    net = RecurrentNet(config)
    if params is not None:
        net.set_params(params)
    w = np.asarray(window, dtype=np.float64).reshape(1, -1)
    return float(net.predict(w)[0])

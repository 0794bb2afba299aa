import numpy as np
import pytest

from grassforecast.data import WindowedDataset
from grassforecast.errors import ConfigError, DimensionMismatch
from grassforecast.nn import train
from grassforecast.nn.gradcheck import max_relative_error
from grassforecast.nn.recurrent import (
    GRU_GATES,
    LSTM_GATES,
    LstmState,
    RecurrentNet,
    RnnConfig,
    gru_step,
    lstm_step,
    rnn_forward,
)

from conftest import jitter_params


def zero_cell(gates, hidden=1, n_in=1):
    p = {}
    for g in gates:
        p[f"W_{g}"] = np.zeros((hidden, n_in))
        p[f"U_{g}"] = np.zeros((hidden, hidden))
        p[f"b_{g}"] = np.zeros(hidden)
    return p


def windows(lag, n=24, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.uniform(-1, 1, size=(n, lag))
    y = X.sum(axis=1) * 0.3 + 0.1 * rng.normal(size=n)
    return WindowedDataset(X, y, lag)


# ----------------------------------------------------------------------- cells


def test_lstm_zero_params_from_rest():
    st = lstm_step(zero_cell(LSTM_GATES), [0.7], LstmState(np.zeros(1), np.zeros(1)))
    for g in "ifo":
        assert st.gates[g][0] == 0.5
    assert st.gates["g"][0] == 0.0
    assert st.c[0] == 0.0 and st.h[0] == 0.0


def test_lstm_zero_params_halves_cell():
    st = lstm_step(zero_cell(LSTM_GATES), [0.0], LstmState(np.zeros(1), np.array([2.0])))
    assert st.c[0] == 1.0
    assert st.h[0] == pytest.approx(0.38079, abs=1e-5)
    assert st.h[0] == 0.5 * np.tanh(1.0)


def test_lstm_saturated_gates_remember():
    p = zero_cell(LSTM_GATES, hidden=3)
    p["b_f"][:] = 20.0
    p["b_i"][:] = -20.0
    p["W_g"][:] = 1.0
    c0 = np.array([0.3, -1.2, 2.5])
    st = lstm_step(p, [0.9], LstmState(np.zeros(3), c0))
    np.testing.assert_allclose(st.c, c0, rtol=0, atol=1e-6)


def test_gru_zero_params():
    h, gates = gru_step(zero_cell(GRU_GATES), [0.4], np.array([2.0]), return_gates=True)
    assert gates["z"][0] == 0.5 and gates["g"][0] == 0.0
    assert h[0] == 1.0
    assert gru_step(zero_cell(GRU_GATES), [0.4], np.zeros(1))[0] == 0.0


def test_gru_saturated_update_gate_copies_state():
    p = zero_cell(GRU_GATES, hidden=2)
    p["b_z"][:] = 20.0
    p["W_g"][:] = 3.0
    h0 = np.array([0.8, -0.4])
    np.testing.assert_allclose(gru_step(p, [1.0], h0), h0, rtol=0, atol=1e-6)


def test_cell_dimension_checks():
    with pytest.raises(DimensionMismatch):
        lstm_step(zero_cell(LSTM_GATES, hidden=2), [0.1], LstmState(np.zeros(3), np.zeros(3)))
    with pytest.raises(DimensionMismatch):
        gru_step(zero_cell(GRU_GATES), [0.1, 0.2], np.zeros(1))


def test_literal_lstm_flips_bias_signs():
    p = zero_cell(LSTM_GATES)
    for g in LSTM_GATES:
        p[f"b_{g}"][:] = 0.8
    prev = LstmState(np.zeros(1), np.array([1.0]))
    std = lstm_step(p, [0.0], prev)
    lit = lstm_step(p, [0.0], prev, paper_literal=True)
    sig = lambda a: 1 / (1 + np.exp(-a))
    assert lit.gates["i"][0] == pytest.approx(sig(-0.8), abs=1e-15)
    assert lit.gates["f"][0] == pytest.approx(sig(0.8), abs=1e-15)
    assert lit.gates["g"][0] == pytest.approx(np.tanh(-0.8), abs=1e-15)
    assert lit.h[0] == pytest.approx(sig(-0.8) * np.tanh(np.tanh(-0.8)), abs=1e-15)
    assert std.h[0] == pytest.approx(sig(0.8) * np.tanh(std.c[0]), abs=1e-15)


# --------------------------------------------------------------------- network


@pytest.mark.parametrize("kind", ["lstm", "gru"])
def test_zero_parameter_network_outputs_zero(kind):
    cfg = RnnConfig(cell_kind=kind, hidden_sizes=(3, 2), lag=4)
    params = {k: np.zeros_like(v) for k, v in RecurrentNet(cfg).params.items()}
    assert rnn_forward(cfg, params, [0.3, -0.2, 0.9, 0.5]) == 0.0


@pytest.mark.parametrize("kind", ["lstm", "gru"])
@pytest.mark.parametrize("literal", [False, True])
@pytest.mark.parametrize("hidden", [(4,), (3, 2)])
def test_bptt_matches_finite_differences(kind, literal, hidden):
    data = windows(lag=4)
    cfg = RnnConfig(cell_kind=kind, hidden_sizes=hidden, lag=4, seed=5, paper_literal=literal)
    net = jitter_params(RecurrentNet(cfg), np.random.default_rng(6))
    assert max_relative_error(net, data.inputs, data.targets) < 1e-4


def test_each_lag_value_is_one_timestep():
    cfg = RnnConfig(cell_kind="gru", hidden_sizes=(2,), lag=3, seed=1)
    net = RecurrentNet(cfg)
    p = net.layer_params(0)
    h = np.zeros(2)
    for x in [0.1, 0.5, -0.3]:
        h = gru_step(p, [x], h)
    expected = h @ net.params["out.W"][0] + net.params["out.b"][0]
    assert net.predict([[0.1, 0.5, -0.3]])[0] == pytest.approx(expected, abs=1e-15)


@pytest.mark.parametrize("kind", ["lstm", "gru"])
def test_zero_learning_rate_and_determinism(kind):
    data = windows(lag=3, n=40)
    cfg = RnnConfig(cell_kind=kind, hidden_sizes=(5,), lag=3, seed=9)
    frozen = RecurrentNet(cfg)
    before = frozen.copy_params()
    train(frozen, data, data, epochs=2, batch_size=8, learning_rate=0.0)
    for k, v in before.items():
        np.testing.assert_array_equal(frozen.params[k], v)
    a, b = RecurrentNet(cfg), RecurrentNet(cfg)
    for net in (a, b):
        train(net, data, data, epochs=3, batch_size=8, learning_rate=0.05)
    for k in a.params:
        np.testing.assert_array_equal(a.params[k], b.params[k])


def test_rnn_config_validation():
    with pytest.raises(ConfigError):
        RnnConfig(cell_kind="elman")
    with pytest.raises(ConfigError):
        RnnConfig(hidden_sizes=())


def test_gru_state_is_convex_combination():
    rng = np.random.default_rng(12)
    p = {k: rng.normal(scale=2, size=v.shape) for k, v in zero_cell(GRU_GATES, hidden=5).items()}
    for _ in range(200):
        h_prev = rng.normal(scale=3, size=5)
        h, gates = gru_step(p, rng.normal(size=1), h_prev, return_gates=True)
        # open intervals in exact arithmetic; saturation can reach the ends in floating point
        assert np.all((gates["z"] >= 0) & (gates["z"] <= 1)) and np.all(np.abs(gates["g"]) <= 1)
        lo, hi = np.minimum(h_prev, gates["g"]), np.maximum(h_prev, gates["g"])
        assert np.all(h >= lo - 1e-15) and np.all(h <= hi + 1e-15)

import numpy as np
import pytest

from grassforecast.data import WindowedDataset
from grassforecast.errors import ConfigError, DimensionMismatch, DivergenceDetected
from grassforecast.nn.core import (
    DenseLayer,
    Mlp,
    MlpConfig,
    activate,
    backward,
    dense_forward,
    mlp_predict,
    mse_loss,
    train,
)
from grassforecast.nn.gradcheck import max_relative_error, relative_error

from conftest import jitter_params


def linear_data(n=50, slope=2.0):
    x = np.linspace(0.0, 1.0, n)
    return WindowedDataset(x[:, None], slope * x, 1)


def toy_windows(n=80, lag=2, seed=0):
    rng = np.random.default_rng(seed)
    s = np.sin(np.arange(n + lag) / 4.0) + 0.1 * rng.normal(size=n + lag)
    X = np.lib.stride_tricks.sliding_window_view(s[:-1], lag)
    return WindowedDataset(X.copy(), s[lag:].copy(), lag)


@pytest.mark.parametrize("targets, outputs, expected", [([1, 2], [1, 2], 0.0), ([1, 2], [1, 4], 2.0), ([0], [3], 9.0)])
def test_mse_loss_examples(targets, outputs, expected):
    assert mse_loss(targets, outputs) == expected


def test_dense_forward_examples():
    h, a = dense_forward(DenseLayer([[1.0]], [-0.5], "relu"), [2.0])
    assert a[0] == 1.5 and h[0] == 1.5
    h, _ = dense_forward(DenseLayer([[1.0]], [-0.5], "relu"), [0.0])
    assert h[0] == 0.0
    h, _ = dense_forward(DenseLayer([[2.0]], [0.0], "linear"), [1.5])
    assert h[0] == 3.0
    with pytest.raises(DimensionMismatch):
        dense_forward(DenseLayer([[1.0, 2.0]], [0.0]), [1.0])


def test_activation_ranges():
    a = np.linspace(-800, 800, 4001)
    s = activate("sigmoid", a)
    assert np.all((s >= 0) & (s <= 1)) and np.all(np.isfinite(s))
    assert np.all(activate("relu", a) >= 0)
    t = activate("tanh", a)
    assert np.all(np.abs(t) <= 1)
    with pytest.raises(ConfigError):
        activate("swish", a)


def test_dead_relu_blocks_first_layer_gradient():
    net = Mlp(MlpConfig(layer_sizes=(4,), lag=3))
    net.params["b0"][:] = -1.0
    grads = backward(net, np.zeros((5, 3)), np.ones(5))
    np.testing.assert_array_equal(grads["W0"], 0.0)
    np.testing.assert_array_equal(grads["b0"], 0.0)


@pytest.mark.parametrize("activation", ["relu", "tanh", "sigmoid", "linear"])
def test_mlp_gradients_match_finite_differences(activation):
    rng = np.random.default_rng(1)
    data = toy_windows(lag=3)
    net = jitter_params(Mlp(MlpConfig(layer_sizes=(6, 4), lag=3, activation=activation, seed=2)), rng)
    assert max_relative_error(net, data.inputs[:16], data.targets[:16]) < 1e-4


def test_relative_error_floor():
    assert relative_error(0.0, 1e-9)[()] == pytest.approx(1e-3)
    assert relative_error(2.0, 1.0)[()] == 0.5


def test_mlp_predict_examples():
    net = Mlp(MlpConfig(layer_sizes=(3,), lag=2))
    for v in net.params.values():
        v[...] = 0.0
    assert mlp_predict(net, [0.7, -0.2]) == 0.0
    neuron = Mlp(MlpConfig(layer_sizes=(), lag=1))
    neuron.params["W0"][...] = 1.0
    neuron.params["b0"][...] = 0.0
    assert mlp_predict(neuron, [0.4]) == 0.4
    with pytest.raises(DimensionMismatch):
        mlp_predict(neuron, [0.1, 0.2])


def test_single_neuron_learns_least_squares_line():
    data = linear_data()
    # closed-form least-squares oracle for w x + b
    A = np.column_stack([data.inputs[:, 0], np.ones(len(data))])
    w_ls, b_ls = np.linalg.lstsq(A, data.targets, rcond=None)[0]
    net = Mlp(MlpConfig(layer_sizes=(), lag=1, seed=0))
    train(net, data, None, epochs=200, batch_size=1, learning_rate=0.1)
    assert abs(net.params["W0"][0, 0] - w_ls) <= 0.01
    assert abs(net.params["b0"][0] - b_ls) <= 0.01
    assert mlp_predict(net, [0.3]) == pytest.approx(0.6, abs=0.02)


def test_zero_learning_rate_leaves_parameters():
    net = Mlp(MlpConfig(layer_sizes=(5, 5), lag=2, seed=4))
    before = net.copy_params()
    data = toy_windows()
    train(net, data, data, epochs=3, batch_size=8, learning_rate=0.0)
    for k, v in before.items():
        np.testing.assert_array_equal(net.params[k], v)


def test_training_is_bitwise_deterministic():
    data = toy_windows()
    nets = [Mlp(MlpConfig(layer_sizes=(8,), lag=2, seed=11)) for _ in range(2)]
    traces = [train(n, data, data, epochs=5, batch_size=16, learning_rate=0.05) for n in nets]
    for k in nets[0].params:
        np.testing.assert_array_equal(nets[0].params[k], nets[1].params[k])
    assert traces[0].to_dict() == traces[1].to_dict()


def test_training_loss_settles():
    data = toy_windows(n=200)
    net = Mlp(MlpConfig(layer_sizes=(10,), lag=2, seed=0))
    trace = train(net, data, data, epochs=40, batch_size=16, learning_rate=0.05)
    loss = trace.train_loss_per_epoch
    assert len(loss) == 40 and len(trace.val_loss_per_epoch) == 40
    assert loss[-1] < loss[2]
    # small-step SGD on a smooth target decreases from epoch 3 onward
    assert all(b <= a * (1 + 1e-3) for a, b in zip(loss[2:], loss[3:]))


def test_divergence_is_detected():
    data = toy_windows()
    net = Mlp(MlpConfig(layer_sizes=(8,), lag=2, seed=0))
    with pytest.raises(DivergenceDetected):
        train(net, data, data, epochs=50, batch_size=4, learning_rate=1e6)


def test_config_validation():
    with pytest.raises(ConfigError):
        MlpConfig(layer_sizes=(0,))
    with pytest.raises(ConfigError):
        MlpConfig(epochs=0)


@pytest.mark.parametrize("layer_sizes", [(), (6,)])
def test_noiseless_linear_task_loss_never_rises_after_epoch_3(layer_sizes):
    x = np.linspace(0.0, 1.0, 64)
    data = WindowedDataset(np.column_stack([x, x**2]), 0.5 * x + 0.2, 2)
    net = Mlp(MlpConfig(layer_sizes=layer_sizes, lag=2, seed=1))
    loss = train(net, data, None, epochs=60, batch_size=16, learning_rate=1e-2).train_loss_per_epoch
    assert all(b <= a for a, b in zip(loss[2:], loss[3:]))

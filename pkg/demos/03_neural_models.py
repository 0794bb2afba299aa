"""MLP, LSTM and GRU trained with plain numpy backpropagation."""
# %%
from grassforecast.data import SyntheticSpec, generate_synthetic, split, window
from grassforecast.models import build_network, run_experiment
from grassforecast.nn import MlpConfig, RnnConfig
from grassforecast.nn.gradcheck import max_relative_error

parts = split(generate_synthetic(SyntheticSpec(length=1757, seed=7)))

# %% Small configurations so the script finishes in seconds. A longer lag and
# larger steps than the defaults help these short runs; the recurrent nets
# would need more epochs to catch up with the MLP.
fast = dict(lag=8, learning_rate=0.1, batch_size=8)
configs = [
    MlpConfig(layer_sizes=(10,), epochs=30, **fast),
    RnnConfig(cell_kind="lstm", hidden_sizes=(8,), epochs=10, **fast),
    RnnConfig(cell_kind="gru", hidden_sizes=(8,), epochs=10, **fast),
]
for cfg in configs:
    res = run_experiment(cfg, parts)
    name = getattr(cfg, "cell_kind", cfg.family)
    trace = res["forecaster"].trace
    print(
        f"{name:5s} test RMSE {res['metrics']['test'].rmse:6.3f}"
        f"  persistence {res['baseline']['test'].rmse:6.3f}"
        f"  final train loss {trace.train_loss_per_epoch[-1]:.5f}"
    )

# %% Analytic gradients agree with central differences.
ds = window(parts.train.values[:40] / 100.0, lag=8)
for cfg in configs:
    print(cfg.family, max_relative_error(build_network(cfg), ds.inputs, ds.targets))

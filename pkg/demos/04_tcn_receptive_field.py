"""Causal dilated convolutions and the receptive field of a TCN."""
# %%
import numpy as np

from grassforecast.nn.tcn import TcnConfig, TcnNet, receptive_field

cfg = TcnConfig(filters=8, kernel_size=3, blocks=3, dilations=(1, 2, 4), lag=40, activation="tanh")
print("block dilations:", cfg.block_dilations(), "receptive field:", receptive_field(cfg))

# %% Perturb one input position at a time and see which outputs move.
net = TcnNet(cfg)
rng = np.random.default_rng(0)
x = rng.normal(size=(1, cfg.lag))
base = net.predict(x)[0]
reach = []
for pos in range(cfg.lag):
    bumped = x.copy()
    bumped[0, pos] += 1.0
    if net.predict(bumped)[0] != base:
        reach.append(pos)
print("last output depends on", cfg.lag - min(reach), "trailing inputs")

# %% The reference configuration used for forecasting.
ref = TcnConfig()
print("default config:", ref.block_dilations(), "receptive field", receptive_field(ref))

"""Synthetic series, chronological split, MinMax scaling and lag windows."""
# %%
import numpy as np

from grassforecast.data import (
    SyntheticSpec,
    fit_minmax,
    generate_synthetic,
    inverse_transform,
    split,
    transform,
    window,
)

series = generate_synthetic(SyntheticSpec(length=1757, seed=7))
print("points:", len(series), "range:", series.values.min().round(2), "to", series.values.max().round(2))

# %% The split is chronological, so no future value leaks into training.
parts = split(series)
print({name: len(getattr(parts, name)) for name in ("train", "val", "test")})

# %% Scaling statistics come from the training part only.
params = fit_minmax(parts.train)
scaled_test = transform(parts.test, params)
print("scaled test range:", scaled_test.values.min().round(3), scaled_test.values.max().round(3))
back = inverse_transform(scaled_test, params)
print("roundtrip error:", np.abs(back.values - parts.test.values).max())

# %% Each row of a window holds the previous `lag` values; the target is the next one.
ds = window(transform(parts.train, params), lag=3)
print("inputs", ds.inputs.shape, "targets", ds.targets.shape)
print(ds.inputs[:2], ds.targets[:2])

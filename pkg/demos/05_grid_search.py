"""Grid search over ARIMA orders with per-axis aggregates."""
# %%
import warnings

from grassforecast.data import SyntheticSpec, generate_synthetic, split
from grassforecast.tuning import GridSpec, paper_grid, run_grid

parts = split(generate_synthetic(SyntheticSpec(length=600, seed=7)))

# %% The reference ARIMA grid: p and q in {1, 2, 4}, d in {1, 2, 3}.
with warnings.catch_warnings():
    warnings.simplefilter("ignore", RuntimeWarning)
    res = run_grid(paper_grid("arima"), parts, workers=2)
print("runs:", len(res.runs), "best:", res.best_run.config, "val RMSE", round(res.best_run.val_rmse, 3))
for axis, groups in res.aggregates().items():
    print(axis, {k: round(v["mean_val_rmse"], 3) for k, v in groups.items() if v["mean_val_rmse"]})

# %% A custom grid for the MLP. Results do not depend on the worker count.
grid = GridSpec("mlp", {"layer_sizes": [(5,), (10, 10)], "lag": [2, 4]}, base={"epochs": 10})
small = run_grid(grid, parts, seed=1, workers=2)
for run in small.runs:
    print(run.status, run.config.layer_sizes, run.config.lag, round(run.val_rmse, 4))

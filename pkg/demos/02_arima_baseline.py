"""ARIMA by conditional sum of squares, compared with persistence."""
# %%
import warnings

from grassforecast.data import SyntheticSpec, generate_synthetic, split
from grassforecast.models import ArimaConfig, run_experiment

parts = split(generate_synthetic(SyntheticSpec(length=1757, seed=7)))

# %% A few orders. Each result also carries the persistence baseline on the same points.
for p, d, q in [(0, 1, 0), (1, 1, 1), (2, 1, 2), (2, 0, 2)]:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        res = run_experiment(ArimaConfig(p, d, q), parts)
    test, base = res["metrics"]["test"], res["baseline"]["test"]
    print(f"ARIMA({p},{d},{q})  test RMSE {test.rmse:7.3f}  persistence {base.rmse:7.3f}")

# %% Fitted coefficients and a multi-step recursive forecast.
fc = res["forecaster"]
print("phi", fc.model.phi, "theta", fc.model.theta)
print("next 5 weeks:", fc.forecast(parts.test.values, 5).round(2))

"""Univariate forecasting of weekly grass heights.

ARIMA, MLP, LSTM, GRU and TCN forecasters written directly in numpy, with
the split / scale / window pipeline, error metrics and grid-search harness
needed to compare them.
"""

__version__ = "0.1.0"

from .data import (
    DatasetSplits,
    MinMaxParams,
    SplitSpec,
    SyntheticSpec,
    TimeSeries,
    WindowedDataset,
    fit_minmax,
    generate_synthetic,
    inverse_transform,
    load_csv,
    split,
    transform,
    window,
)
from .metrics import EvalReport, evaluate, mae, rmse
from .models import ArimaConfig, TrainedForecaster, fit_forecaster, run_experiment
from .nn.core import MlpConfig
from .nn.recurrent import RnnConfig
from .nn.tcn import TcnConfig

__all__ = [
    "DatasetSplits",
    "MinMaxParams",
    "SplitSpec",
    "SyntheticSpec",
    "TimeSeries",
    "WindowedDataset",
    "fit_minmax",
    "generate_synthetic",
    "inverse_transform",
    "load_csv",
    "split",
    "transform",
    "window",
    "EvalReport",
    "evaluate",
    "mae",
    "rmse",
    "ArimaConfig",
    "TrainedForecaster",
    "fit_forecaster",
    "run_experiment",
    "MlpConfig",
    "RnnConfig",
    "TcnConfig",
]

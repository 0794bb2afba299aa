"""Series ingestion, chronological splitting, MinMax scaling and windowing.

The pipeline order is fixed: split the raw series first, fit the scaler on
the training part only, transform every part with those parameters, and
only then cut each part into (lag window, next value) pairs. Windows never
straddle a split boundary.
"""

from __future__ import annotations

import csv
import datetime as _dt
import io
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import (
    DegenerateRange,
    DimensionMismatch,
    NonMonotonicTimestamps,
    ParseError,
    SeriesTooShort,
)

__all__ = [
    "TimeSeries",
    "SplitSpec",
    "DatasetSplits",
    "MinMaxParams",
    "WindowedDataset",
    "SyntheticSpec",
    "split",
    "fit_minmax",
    "transform",
    "inverse_transform",
    "window",
    "load_csv",
    "dump_csv",
    "write_csv",
    "generate_synthetic",
]


def _frozen_array(values) -> np.ndarray:
    arr = np.array(values, dtype=np.float64, copy=True).reshape(-1)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class TimeSeries:
    """Ordered weekly observations (heights in cm).

    Attributes:
        values: Observations as a read-only float64 array.
        start_index: Week ordinal of ``values[0]``.
        timestamps: Optional ISO dates, one per value, strictly increasing.
    """

    values: np.ndarray
    start_index: int = 0
    timestamps: Optional[tuple[str, ...]] = None

    def __post_init__(self):
        values = _frozen_array(self.values)
        if values.size == 0:
            raise SeriesTooShort("a series needs at least one value")
        if not np.all(np.isfinite(values)):
            raise ValueError("series values must be finite")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "start_index", int(self.start_index))
        if self.timestamps is not None:
            stamps = tuple(str(s) for s in self.timestamps)
            if len(stamps) != values.size:
                raise ValueError(
                    f"{len(stamps)} timestamps for {values.size} values"
                )
            parsed = [_dt.date.fromisoformat(s) for s in stamps]
            if any(b <= a for a, b in zip(parsed, parsed[1:])):
                raise NonMonotonicTimestamps("timestamps must be strictly increasing")
            object.__setattr__(self, "timestamps", stamps)

    def __len__(self):
        return int(self.values.size)

    def __eq__(self, other):
        if not isinstance(other, TimeSeries):
            return NotImplemented
        return (
            self.start_index == other.start_index
            and self.timestamps == other.timestamps
            and np.array_equal(self.values, other.values)
        )

    def __getitem__(self, item: slice) -> "TimeSeries":
        if not isinstance(item, slice) or item.step not in (None, 1):
            raise TypeError("TimeSeries only supports contiguous slices")
        start, stop, _ = item.indices(len(self))
        stamps = None if self.timestamps is None else self.timestamps[start:stop]
        return TimeSeries(self.values[start:stop], self.start_index + start, stamps)

    def with_values(self, values) -> "TimeSeries":
        """Same indexing, new values (used by the scaler)."""
        return TimeSeries(values, self.start_index, self.timestamps)

    @staticmethod
    def concat(parts: Sequence["TimeSeries"]) -> "TimeSeries":
        values = np.concatenate([p.values for p in parts])
        stamps = None
        if all(p.timestamps is not None for p in parts):
            stamps = tuple(s for p in parts for s in p.timestamps)
        return TimeSeries(values, parts[0].start_index, stamps)


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.6
    val_fraction: float = 0.2
    test_fraction: float = 0.2

    def __post_init__(self):
        fractions = (self.train_fraction, self.val_fraction, self.test_fraction)
        if not all(0.0 < f < 1.0 for f in fractions):
            raise ValueError("split fractions must lie strictly inside (0, 1)")
        if abs(sum(fractions) - 1.0) > 1e-9:
            raise ValueError(f"split fractions sum to {sum(fractions)!r}, not 1")


@dataclass(frozen=True)
class DatasetSplits:
    train: TimeSeries
    val: TimeSeries
    test: TimeSeries

    @property
    def sizes(self) -> dict:
        return {"train": len(self.train), "val": len(self.val), "test": len(self.test)}

    def full(self) -> TimeSeries:
        return TimeSeries.concat([self.train, self.val, self.test])

    def map(self, fn) -> "DatasetSplits":
        return DatasetSplits(fn(self.train), fn(self.val), fn(self.test))


@dataclass(frozen=True)
class MinMaxParams:
    min: float
    max: float

    def __post_init__(self):
        if not (math.isfinite(self.min) and math.isfinite(self.max)):
            raise ValueError("scaler bounds must be finite")
        if not self.max > self.min:
            raise DegenerateRange(f"max ({self.max}) must exceed min ({self.min})")

    @property
    def span(self) -> float:
        return self.max - self.min

    def scale(self, values) -> np.ndarray:
        return (np.asarray(values, dtype=np.float64) - self.min) / self.span

    def unscale(self, values) -> np.ndarray:
        return np.asarray(values, dtype=np.float64) * self.span + self.min


@dataclass(frozen=True, eq=False)
class WindowedDataset:
    """Supervised pairs: ``inputs[i] = s[i:i+lag]`` and ``targets[i] = s[i+lag]``."""

    inputs: np.ndarray
    targets: np.ndarray
    lag: int

    def __len__(self):
        return int(self.targets.shape[0])


def split(series: TimeSeries, spec: SplitSpec = SplitSpec(), min_length: int = 1) -> DatasetSplits:
    """Chronological train/val/test partition.

    Train and val lengths are floored; test takes whatever is left.
    ``min_length`` lets callers demand room for windowing, e.g. ``lag + 1``.
    """
    n = len(series)
    n_train = math.floor(spec.train_fraction * n)
    n_val = math.floor(spec.val_fraction * n)
    n_test = n - n_train - n_val
    if min(n_train, n_val, n_test) < max(1, min_length):
        raise SeriesTooShort(
            f"series of length {n} yields split sizes ({n_train}, {n_val}, {n_test}); "
            f"each needs at least {max(1, min_length)}"
        )
    return DatasetSplits(
        series[:n_train],
        series[n_train : n_train + n_val],
        series[n_train + n_val :],
    )


def fit_minmax(train: TimeSeries) -> MinMaxParams:
    values = train.values
    return MinMaxParams(float(values.min()), float(values.max()))


def transform(series: TimeSeries, params: MinMaxParams) -> TimeSeries:
    # out-of-range val/test values map outside [0, 1]; no clipping
    return series.with_values(params.scale(series.values))


def inverse_transform(series: TimeSeries, params: MinMaxParams) -> TimeSeries:
    return series.with_values(params.unscale(series.values))


def window(series, lag: int) -> WindowedDataset:
    values = series.values if isinstance(series, TimeSeries) else np.asarray(series, dtype=np.float64)
    if lag < 1:
        raise DimensionMismatch(f"lag must be positive, got {lag}")
    if values.size <= lag:
        raise SeriesTooShort(f"series of length {values.size} cannot be windowed with lag {lag}")
    inputs = np.lib.stride_tricks.sliding_window_view(values, lag)[:-1].copy()
    targets = values[lag:].copy()
    return WindowedDataset(inputs, targets, lag)


# --------------------------------------------------------------------------- CSV


def _parse_rows(text: str, source: str) -> TimeSeries:
    weeks, heights, dates = [], [], []
    reader = csv.reader(io.StringIO(text))
    for lineno, row in enumerate(reader, start=1):
        if not row or all(not cell.strip() for cell in row):
            continue
        if lineno == 1 and row[0].strip().lower() == "week":
            continue
        if len(row) < 2:
            raise ParseError(lineno, f"expected 'week,height', got {row!r}")
        try:
            week = int(row[0].strip())
        except ValueError:
            raise ParseError(lineno, f"week {row[0]!r} is not an integer") from None
        try:
            height = float(row[1].strip())
        except ValueError:
            raise ParseError(lineno, f"height {row[1]!r} is not a number") from None
        if not math.isfinite(height):
            raise ParseError(lineno, f"height {row[1]!r} is not finite")
        if weeks and week <= weeks[-1]:
            raise NonMonotonicTimestamps(
                f"row {lineno}: week {week} does not follow week {weeks[-1]}"
            )
        weeks.append(week)
        heights.append(height)
        if len(row) >= 3 and row[2].strip():
            dates.append(row[2].strip())
    if not heights:
        raise ParseError(0, f"no data rows in {source}")
    stamps = tuple(dates) if dates else None
    if stamps is not None and len(stamps) != len(heights):
        raise ParseError(0, "date column must be filled on every row or none")
    return TimeSeries(heights, weeks[0], stamps)


def load_csv(path) -> TimeSeries:
    """Read ``week,height[,date]`` rows; the header line is optional."""
    path = Path(path)
    with open(path, encoding="utf-8", newline="") as fh:
        text = fh.read()
    return _parse_rows(text, str(path))


def dump_csv(series: TimeSeries) -> str:
    out = io.StringIO()
    with_dates = series.timestamps is not None
    out.write("week,height,date\n" if with_dates else "week,height\n")
    for i, v in enumerate(series.values):
        line = f"{series.start_index + i},{float(v)!r}"
        if with_dates:
            line += f",{series.timestamps[i]}"
        out.write(line + "\n")
    return out.getvalue()


def write_csv(series: TimeSeries, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dump_csv(series))


# --------------------------------------------------------------------- synthetic


@dataclass(frozen=True)
class SyntheticSpec:
    """Seasonal sine + linear trend + Gaussian noise, a stand-in for field data.

    ``period=52`` gives one cycle per year of weekly samples.
    """

    length: int = 1757
    period: float = 52.0
    amplitude: float = 40.0
    trend: float = 0.01
    noise: float = 5.0
    level: float = 50.0
    seed: int = 7
    start_index: int = 1

    def __post_init__(self):
        if self.length < 1:
            raise ValueError("length must be positive")
        if self.noise < 0:
            raise ValueError("noise scale must be non-negative")
        if self.period <= 0:
            raise ValueError("period must be positive")


def generate_synthetic(spec: SyntheticSpec = SyntheticSpec()) -> TimeSeries:
    rng = np.random.default_rng(spec.seed)
    t = np.arange(spec.length, dtype=np.float64)
    clean = spec.level + spec.amplitude * np.sin(2.0 * np.pi * t / spec.period) + spec.trend * t
    noise = rng.normal(0.0, 1.0, spec.length) * spec.noise
    return TimeSeries(clean + noise, spec.start_index)

"""CSV ingestion, min-max scaling, one-step-ahead pairs, chronological
splits and training noise."""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, DataError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TimeSeries:
    columns: dict
    timestamps: list | None = None
    source: str = ""
    dropped: int = 0

    def __post_init__(self):
        lengths = {len(v) for v in self.columns.values()}
        if len(lengths) > 1:
            raise DataError(f"columns have unequal lengths {sorted(lengths)}")
        if lengths and lengths.pop() < 2:
            raise DataError("a series needs at least 2 rows")

    def __len__(self) -> int:
        return len(next(iter(self.columns.values())))

    def __getitem__(self, name: str) -> np.ndarray:
        try:
            return self.columns[name]
        except KeyError:
            raise ConfigurationError(f"no column {name!r}; have {list(self.columns)}") from None

    def slice(self, start: int, stop: int | None = None) -> "TimeSeries":
        cols = {k: v[start:stop] for k, v in self.columns.items()}
        ts = self.timestamps[start:stop] if self.timestamps is not None else None
        return TimeSeries(cols, ts, self.source, self.dropped)


@dataclass(frozen=True)
class NormStats:
    minimum: dict
    maximum: dict

    def __post_init__(self):
        for col in self.minimum:
            if not self.maximum[col] > self.minimum[col]:
                raise DataError(f"column {col!r} is constant over the fit range")

    def to_dict(self) -> dict:
        return {c: {"min": self.minimum[c], "max": self.maximum[c]} for c in self.minimum}

    @classmethod
    def from_dict(cls, d: dict) -> "NormStats":
        return cls({c: float(v["min"]) for c, v in d.items()}, {c: float(v["max"]) for c, v in d.items()})


@dataclass(frozen=True)
class WindowedDataset:
    inputs: np.ndarray
    labels: np.ndarray
    feature_names: tuple
    target: str = ""
    offset: int = 0  # series index of the first sample

    def __post_init__(self):
        if len(self.inputs) != len(self.labels):
            raise DataError("inputs and labels differ in length")

    def __len__(self) -> int:
        return len(self.labels)

    def subset(self, start: int, stop: int | None = None) -> "WindowedDataset":
        return replace(self, inputs=self.inputs[start:stop], labels=self.labels[start:stop], offset=self.offset + start)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(list(self.feature_names) + [f"{self.target}_next"])
            for row, label in zip(self.inputs, self.labels):
                w.writerow([repr(float(v)) for v in row] + [repr(float(label))])


def _parse(cell: str) -> float:
    try:
        value = float(cell)
    except (TypeError, ValueError):
        return math.nan
    return value


def load_series(path, target_column: str, feature_columns=None, timestamp_column: str | None = None, delimiter: str = ",") -> TimeSeries:
    """Read a headed CSV. Rows whose target (or any selected feature) does
    not parse as a finite number are dropped and counted."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"dataset not found: {path}")
    wanted = [target_column] + [c for c in (feature_columns or []) if c != target_column]
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh, delimiter=delimiter)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{path} is empty") from None
        missing = [c for c in wanted + ([timestamp_column] if timestamp_column else []) if c not in header]
        if missing:
            raise ConfigurationError(f"columns {missing} not in {path.name} (header: {header})")
        idx = {c: header.index(c) for c in wanted}
        ts_idx = header.index(timestamp_column) if timestamp_column else None
        data = {c: [] for c in wanted}
        stamps = [] if timestamp_column else None
        dropped = 0
        for row in reader:
            if not row:
                continue
            vals = {c: _parse(row[i]) if i < len(row) else math.nan for c, i in idx.items()}
            if not all(math.isfinite(v) for v in vals.values()):
                dropped += 1
                continue
            for c, v in vals.items():
                data[c].append(v)
            if stamps is not None:
                stamps.append(row[ts_idx])
    if dropped:
        logger.info("dropped %d unparseable row(s) from %s", dropped, path.name)
    if len(data[target_column]) < 2:
        raise DataError(f"{path.name} has fewer than 2 usable rows")
    cols = {c: np.asarray(v, dtype=float) for c, v in data.items()}
    return TimeSeries(cols, stamps, str(path), dropped)


def minmax_fit(series: TimeSeries, columns, fit_range: tuple | None = None, test_start: int | None = None) -> NormStats:
    """Per-column min/max over ``series[fit_range[0]:fit_range[1]]``.

    Passing ``test_start`` rejects any fit range that reaches into the test
    region.
    """
    start, stop = fit_range if fit_range is not None else (0, len(series))
    if not 0 <= start < stop <= len(series):
        raise ConfigurationError(f"fit range {(start, stop)} outside series of length {len(series)}")
    if test_start is not None and stop > test_start:
        raise DataError(f"fit range ends at {stop}, past the test boundary {test_start}")
    mins, maxs = {}, {}
    for c in columns:
        window = series[c][start:stop]
        mins[c], maxs[c] = float(window.min()), float(window.max())
    return NormStats(mins, maxs)


def minmax_apply(series: TimeSeries, stats: NormStats) -> TimeSeries:
    cols = dict(series.columns)
    for c in stats.minimum:
        cols[c] = scale(series[c], stats, c)
    return TimeSeries(cols, series.timestamps, series.source, series.dropped)


def scale(values, stats: NormStats, column: str) -> np.ndarray:
    lo, hi = stats.minimum[column], stats.maximum[column]
    return (np.asarray(values, dtype=float) - lo) / (hi - lo)


def minmax_invert(values, stats: NormStats, column: str) -> np.ndarray:
    lo, hi = stats.minimum[column], stats.maximum[column]
    return np.asarray(values, dtype=float) * (hi - lo) + lo


def make_supervised(series: TimeSeries, target: str, features=None, shift: int = 1) -> WindowedDataset:
    """Sample t pairs the features at index t with the target at t + shift."""
    features = list(features) if features else [target]
    n = len(series)
    if shift < 1 or n < shift + 1:
        raise DataError(f"series of length {n} too short for shift {shift}")
    inputs = np.column_stack([series[c][: n - shift] for c in features])
    labels = np.array(series[target][shift:], dtype=float)
    return WindowedDataset(inputs, labels, tuple(features), target)


def split_index(n: int, ratio: float | None = None, boundary_index: int | None = None) -> int:
    if (ratio is None) == (boundary_index is None):
        raise ConfigurationError("give exactly one of ratio or boundary_index")
    k = math.floor(n * ratio + 1e-9) if ratio is not None else int(boundary_index)
    if not 0 < k < n:
        raise ConfigurationError(f"split at {k} leaves an empty side of {n} samples")
    return k


def chronological_split(dataset: WindowedDataset, ratio: float | None = None, boundary_index: int | None = None):
    k = split_index(len(dataset), ratio, boundary_index)
    return dataset.subset(0, k), dataset.subset(k)


def parse_split(text: str) -> dict:
    """``ratio:0.8`` or ``boundary:1825`` -> keyword arguments for the split."""
    kind, _, value = text.partition(":")
    try:
        if kind == "ratio":
            return {"ratio": float(value)}
        if kind == "boundary":
            return {"boundary_index": int(value)}
    except ValueError:
        pass
    raise ConfigurationError(f"bad split {text!r}; use ratio:R or boundary:N")


def inject_noise(dataset: WindowedDataset, sigma: float = 0.01, seed: int = 0) -> WindowedDataset:
    """Gaussian noise on the inputs only; labels are left untouched."""
    if sigma < 0:
        raise ConfigurationError("noise sigma must be non-negative")
    if sigma == 0:
        return dataset
    rng = np.random.Generator(np.random.PCG64(seed))
    noisy = dataset.inputs + rng.normal(0.0, sigma, size=dataset.inputs.shape)
    return replace(dataset, inputs=noisy)


@dataclass(frozen=True)
class PreparedData:
    train: WindowedDataset
    test: WindowedDataset
    stats: NormStats
    series: TimeSeries = field(repr=False)


def prepare(series: TimeSeries, target: str, features=None, ratio: float | None = None,
            boundary_index: int | None = None, recent: int | None = None) -> PreparedData:
    """Split, fit scaling on the training span only, and build pairs.

    ``recent`` keeps only the last ``recent`` training rows (e.g. a three
    year window of daily data) before fitting and pairing.
    """
    features = list(features) if features else [target]
    n_pairs = len(series) - 1
    k = split_index(n_pairs, ratio, boundary_index)
    # training pairs use series rows 0..k (the last label is row k)
    stats = minmax_fit(series, sorted(set(features) | {target}), (0, k + 1), test_start=k + 1)
    data = make_supervised(minmax_apply(series, stats), target, features)
    train, test = data.subset(0, k), data.subset(k)
    if recent is not None:
        if recent < 2:
            raise ConfigurationError("recent window must hold at least 2 rows")
        start = max(0, k + 1 - recent)
        stats = minmax_fit(series, sorted(set(features) | {target}), (start, k + 1), test_start=k + 1)
        data = make_supervised(minmax_apply(series, stats), target, features)
        train, test = data.subset(start, k), data.subset(k)
    return PreparedData(train, test, stats, series)


def synthetic_sine(n: int = 500, period: float = 50.0, amplitude: float = 0.4, offset: float = 0.5, phase: float = 0.0) -> TimeSeries:
    t = np.arange(n, dtype=float)
    values = offset + amplitude * np.sin(2 * np.pi * t / period + phase)
    return TimeSeries({"value": values}, None, "synthetic_sine")


def write_series_csv(series: TimeSeries, path) -> None:
    names = list(series.columns)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t"] + names)
        for i in range(len(series)):
            w.writerow([i] + [repr(float(series[c][i])) for c in names])

"""One-step and recursive forecasting, metrics, and the freeze-and-transfer
workflow."""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import data_pipeline as dp
from .errors import ConfigurationError, TruncationWarning, UsageError
from .fock_sim import DRIFT_WARN
from .qnn_models import CircuitSpec, ParamVector, build_model, forward
from .training import TrainConfig, square_loss, train


@dataclass(frozen=True)
class ForecastMetrics:
    mse: float
    rmse: float
    pct_rmse: float
    mae: float
    pct_mae: float

    def as_dict(self) -> dict:
        return {"mse": self.mse, "rmse": self.rmse, "pct_rmse": self.pct_rmse, "mae": self.mae, "pct_mae": self.pct_mae}


@dataclass
class ForecastResult:
    predictions: np.ndarray
    actuals: np.ndarray | None = None
    metrics: ForecastMetrics | None = None
    truncation_warnings: int = 0
    mode: str = "predict"
    params: ParamVector | None = field(default=None, repr=False)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["index", "actual", "predicted"])
            for i, p in enumerate(self.predictions):
                a = repr(float(self.actuals[i])) if self.actuals is not None else ""
                w.writerow([i, a, repr(float(p))])


def compute_metrics(actual_raw, predicted_raw, actual_norm=None, predicted_norm=None) -> ForecastMetrics:
    """rmse/mae in raw units; pct_rmse relative to max |actual|, pct_mae to
    mean |actual|; mse in normalized units when those arrays are given."""
    a = np.asarray(actual_raw, dtype=float)
    p = np.asarray(predicted_raw, dtype=float)
    if a.shape != p.shape or a.size == 0:
        raise UsageError("actual and predicted must be equal-length and nonempty")
    err = p - a
    rmse = math.sqrt(math.fsum((err**2).tolist()) / a.size)
    mae = math.fsum(np.abs(err).tolist()) / a.size
    peak = float(np.max(np.abs(a)))
    level = math.fsum(np.abs(a).tolist()) / a.size
    pct_rmse = 100.0 * rmse / peak if peak > 0 else math.nan
    pct_mae = 100.0 * mae / level if level > 0 else math.nan
    if actual_norm is not None and predicted_norm is not None:
        mse = square_loss(predicted_norm, actual_norm)
    else:
        mse = rmse**2
    return ForecastMetrics(mse, rmse, pct_rmse, mae, pct_mae)


def _encode(x: np.ndarray) -> np.ndarray:
    # encoding only; raw labels are kept for metrics
    return np.clip(x, 0.0, 1.0)


def _forward(spec, params, X):
    # drift is counted per sample by the callers instead of warned per batch
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TruncationWarning)
        return forward(spec, params, X)


def predict_series(spec: CircuitSpec, params: ParamVector, dataset: dp.WindowedDataset, stats: dp.NormStats) -> ForecastResult:
    """Evaluate every sample independently and report metrics in raw units."""
    for name in set(dataset.feature_names) | {dataset.target}:
        if name not in stats.minimum:
            raise UsageError(f"normalization stats lack column {name!r}")
    if dataset.inputs.shape[1] != spec.n_features:
        raise UsageError(f"dataset has {dataset.inputs.shape[1]} feature(s), model expects {spec.n_features}")
    outputs, norms = _forward(spec, params, _encode(dataset.inputs))
    pred_raw = dp.minmax_invert(outputs, stats, dataset.target)
    actual_raw = dp.minmax_invert(dataset.labels, stats, dataset.target)
    metrics = compute_metrics(actual_raw, pred_raw, dataset.labels, outputs)
    drifted = int(np.sum(np.abs(norms - 1.0) > DRIFT_WARN)) if spec.backend == "cv" else 0
    return ForecastResult(pred_raw, actual_raw, metrics, drifted, "predict", params)


def recursive_forecast(spec: CircuitSpec, params: ParamVector, seed_window, horizon: int, stats: dp.NormStats,
                       target: str | None = None, actuals=None) -> ForecastResult:
    """Closed-loop forecast: each prediction is appended to the window and the
    oldest value dropped. The last ``spec.n_features`` window values are the
    model inputs (oldest first)."""
    window = [float(v) for v in np.asarray(seed_window, dtype=float).reshape(-1)]
    if not window:
        raise UsageError("seed window is empty")
    if horizon < 1:
        raise UsageError("horizon must be >= 1")
    k = spec.n_features
    if len(window) < k:
        raise UsageError(f"seed window needs at least {k} value(s)")
    target = target or next(iter(stats.minimum))
    preds, drifted = [], 0
    for _ in range(horizon):
        x = _encode(dp.scale(window[-k:], stats, target))
        out, norms = _forward(spec, params, x[None, :])
        value = float(dp.minmax_invert(out, stats, target)[0])
        if spec.backend == "cv" and abs(norms[0] - 1.0) > DRIFT_WARN:
            drifted += 1
        preds.append(value)
        window.append(value)
        window.pop(0)
    preds = np.array(preds)
    metrics = None
    if actuals is not None:
        actuals = np.asarray(actuals, dtype=float)[:horizon]
        metrics = compute_metrics(actuals, preds[: actuals.size],
                                  dp.scale(actuals, stats, target), dp.scale(preds[: actuals.size], stats, target))
    return ForecastResult(preds, actuals, metrics, drifted, "recursive", params)


@dataclass(frozen=True)
class PretrainedWeights:
    kind: str
    slots: tuple
    values: tuple
    n_features: int = 1
    encoding: str | None = None
    cutoff: int = 12
    seed: int = 0
    config_digest: str = ""
    source: str = ""
    stats: dp.NormStats | None = None
    options: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "slots", tuple(self.slots))
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if len(self.slots) != len(self.values):
            raise ConfigurationError("slot names and values differ in length")
        if not all(math.isfinite(v) for v in self.values):
            raise ConfigurationError("weights contain non-finite values")

    def spec(self, cutoff: int | None = None) -> CircuitSpec:
        spec = build_model(self.kind, self.n_features, self.encoding or "angle",
                           cutoff=cutoff or self.cutoff, **self.options)
        if spec.slots != self.slots:
            raise ConfigurationError(f"weights slots {self.slots} do not match {self.kind} layout {spec.slots}")
        return spec

    def params(self) -> ParamVector:
        return ParamVector(np.array(self.values), self.slots)

    @classmethod
    def from_training(cls, spec: CircuitSpec, params: ParamVector, config: TrainConfig, source: str,
                      stats: dp.NormStats | None = None, options: dict | None = None) -> "PretrainedWeights":
        return cls(spec.kind, spec.slots, tuple(params.values.tolist()), spec.n_features, spec.encoding,
                   spec.cutoff or config.cutoff, config.seed, config.digest(), source, stats, dict(options or {}))


def transfer_apply(weights: PretrainedWeights, data: dp.PreparedData, mode="frozen", config: TrainConfig | None = None) -> ForecastResult:
    """Apply pretrained weights to a new dataset scaled with its own stats.

    ``mode`` is ``"frozen"`` or the number of fine-tuning epochs; zero
    epochs is the frozen path.
    """
    if data.train.inputs.shape[1] != weights.n_features:
        raise ConfigurationError(
            f"{weights.kind} weights expect {weights.n_features} feature(s), dataset has {data.train.inputs.shape[1]}"
        )
    spec = weights.spec()
    params = weights.params()
    epochs = 0 if mode == "frozen" else int(mode)
    if epochs < 0:
        raise ConfigurationError("fine-tune epochs must be >= 0")
    if epochs > 0:
        base = config or TrainConfig.for_model(weights.kind, seed=weights.seed, cutoff=weights.cutoff)
        cfg = TrainConfig(**{**base.__dict__, "epochs": epochs})
        params, _ = train(spec, data.train, cfg, initial=params)
    result = predict_series(spec, params, data.test, data.stats)
    result.mode = "frozen" if epochs == 0 else f"fine_tune({epochs})"
    return result

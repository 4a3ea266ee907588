"""Command-line entry point: ``qforecast {train,predict,transfer,forecast,benchmark,draw,synth}``.

Exit codes: 0 success, 2 usage/config, 3 weights/schema, 4 data,
5 training divergence.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

from . import data_pipeline as dp
from . import plots
from . import weights as wio
from .errors import ConfigurationError, QForecastError, UsageError
from .forecasting import PretrainedWeights, predict_series, recursive_forecast, transfer_apply
from .qnn_models import build_model, draw
from .training import TrainConfig, train

logger = logging.getLogger("qforecast")

OUT_ENV = "QFORECAST_OUT_DIR"
MODELS = ("cv1", "cv2", "cv3", "dv2", "dv4")
BENCH_ROSTER = (("cv2", None), ("dv2", "angle"), ("dv2", "amplitude"), ("dv4", "angle"))
DV_LEARNING_RATE = 0.01


@dataclass
class RunConfig:
    command: str
    dataset: Path | None = None
    target_col: str = "value"
    feature_cols: list = field(default_factory=list)
    model: str = "cv2"
    encoding: str = "angle"
    split: dict = field(default_factory=lambda: {"ratio": 0.8})
    weights_in: str | None = None
    weights_out: Path | None = None
    out_dir: Path = Path("qforecast_out")
    horizon: int = 1
    noise_sigma: float = 0.0
    fine_tune: int = 0
    recent: int | None = None
    seed_at: str = "end"
    overrides: dict = field(default_factory=dict)

    @classmethod
    def from_args(cls, ns: argparse.Namespace) -> "RunConfig":
        out = ns.out_dir or os.environ.get(OUT_ENV) or "qforecast_out"
        cfg = cls(command=ns.command, out_dir=Path(out).resolve())
        if getattr(ns, "dataset", None):
            cfg.dataset = Path(ns.dataset).resolve()
        for name in ("target_col", "model", "encoding", "weights_in", "horizon", "noise_sigma", "fine_tune", "recent", "seed_at"):
            value = getattr(ns, name, None)
            if value is not None:
                setattr(cfg, name, value)
        if getattr(ns, "feature_cols", None):
            cfg.feature_cols = [c.strip() for c in ns.feature_cols.split(",") if c.strip()]
        if getattr(ns, "split", None):
            cfg.split = dp.parse_split(ns.split)
        if getattr(ns, "weights_out", None):
            cfg.weights_out = Path(ns.weights_out).resolve()
        cfg.overrides = {
            "epochs": getattr(ns, "epochs", None),
            "learning_rate": getattr(ns, "lr", None),
            "batch_size": getattr(ns, "batch", None),
            "seed": getattr(ns, "seed", None),
            "cutoff": getattr(ns, "cutoff", None),
        }
        if cfg.horizon < 1:
            raise UsageError("--horizon must be >= 1")
        if cfg.fine_tune < 0:
            raise UsageError("--fine-tune must be >= 0")
        if cfg.noise_sigma < 0:
            raise ConfigurationError("--noise-sigma must be non-negative")
        return cfg

    def train_config(self, kind: str) -> TrainConfig:
        kw = {k: v for k, v in self.overrides.items() if v is not None}
        if kind.startswith("dv") and "learning_rate" not in kw:
            kw["learning_rate"] = DV_LEARNING_RATE
        return TrainConfig.for_model(kind, **kw)

    def need_dataset(self) -> Path:
        if self.dataset is None:
            raise UsageError(f"{self.command} needs --dataset")
        if not self.dataset.is_file():
            raise UsageError(f"dataset not found: {self.dataset}")
        return self.dataset


# --- artifact writing -------------------------------------------------------


def _atomic_with(path: Path, write) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    os.close(fd)
    try:
        write(tmp)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _write_text(path: Path, text: str) -> None:
    wio.atomic_write(path, text)


def _summary(cfg: RunConfig, lines: dict) -> None:
    text = "".join(f"{k}: {v}\n" for k, v in lines.items())
    sys.stdout.write(text)
    _write_text(cfg.out_dir / "summary.txt", text)


def _fmt(v) -> str:
    return f"{v:.6g}" if isinstance(v, float) else str(v)


def _result_artifacts(cfg: RunConfig, result, stem: str) -> None:
    _atomic_with(cfg.out_dir / f"{stem}.csv", result.to_csv)
    _write_text(cfg.out_dir / f"{stem}.svg", plots.forecast_chart(result.actuals, result.predictions, stem))


def _metric_lines(result) -> dict:
    m = result.metrics
    return {"mse": _fmt(m.mse), "rmse": _fmt(m.rmse), "pct_rmse": _fmt(m.pct_rmse),
            "mae": _fmt(m.mae), "pct_mae": _fmt(m.pct_mae), "truncation_warnings": result.truncation_warnings}


# --- commands ---------------------------------------------------------------


def _prepared(cfg: RunConfig) -> dp.PreparedData:
    path = cfg.need_dataset()
    series = dp.load_series(path, cfg.target_col, cfg.feature_cols or None)
    if series.dropped:
        logger.warning("dropped %d unparseable row(s)", series.dropped)
    return dp.prepare(series, cfg.target_col, cfg.feature_cols or None, recent=cfg.recent, **cfg.split)


def _train_model(cfg: RunConfig, data: dp.PreparedData, kind: str, encoding: str | None):
    tc = cfg.train_config(kind)
    spec = build_model(kind, data.train.inputs.shape[1], encoding or "angle", cutoff=tc.cutoff)
    train_set = dp.inject_noise(data.train, cfg.noise_sigma, tc.seed)
    params, history = train(spec, train_set, tc)
    return spec, params, history, tc


def cmd_train(cfg: RunConfig) -> int:
    data = _prepared(cfg)
    spec, params, history, tc = _train_model(cfg, data, cfg.model, cfg.encoding)
    source = Path(cfg.dataset).name
    weights = PretrainedWeights.from_training(spec, params, tc, source, data.stats)
    wio.save(weights, cfg.weights_out or cfg.out_dir / "weights.json")
    _atomic_with(cfg.out_dir / "history.csv", history.to_csv)
    _write_text(cfg.out_dir / "history.svg", plots.cost_chart(history.cost))
    result = predict_series(spec, params, data.test, data.stats)
    _result_artifacts(cfg, result, "predictions")
    _summary(cfg, {"model": spec.kind, "slots": len(spec.slots), "final cost": _fmt(history.cost[-1]),
                   "noise_sigma": cfg.noise_sigma, **_metric_lines(result)})
    return 0


def _load_weights(cfg: RunConfig) -> PretrainedWeights:
    if not cfg.weights_in:
        raise UsageError(f"{cfg.command} needs --weights-in (a path or bundled:model2)")
    return wio.resolve(cfg.weights_in)


def cmd_predict(cfg: RunConfig) -> int:
    weights = _load_weights(cfg)
    data = _prepared(cfg)
    result = transfer_apply(weights, data, "frozen")
    _result_artifacts(cfg, result, "predictions")
    _summary(cfg, {"model": weights.kind, **_metric_lines(result)})
    return 0


def cmd_transfer(cfg: RunConfig) -> int:
    weights = _load_weights(cfg)
    data = _prepared(cfg)
    mode = cfg.fine_tune if cfg.fine_tune else "frozen"
    result = transfer_apply(weights, data, mode, cfg.train_config(weights.kind) if cfg.fine_tune else None)
    _result_artifacts(cfg, result, "transfer")
    if cfg.fine_tune and cfg.weights_out:
        tuned = PretrainedWeights(weights.kind, weights.slots, result.params.values.tolist(), weights.n_features,
                                  weights.encoding, weights.cutoff, weights.seed, weights.config_digest,
                                  f"{weights.source} fine-tuned on {cfg.dataset.name}", data.stats, weights.options)
        wio.save(tuned, cfg.weights_out)
    _summary(cfg, {"mode": result.mode, "model": weights.kind, "weights": weights.source, **_metric_lines(result)})
    return 0


def cmd_forecast(cfg: RunConfig) -> int:
    """Recursive forecast seeded with the whole target series (or, with
    ``--seed-at split``, with the training span so the test span is scored)."""
    data = _prepared(cfg)
    if cfg.weights_in:
        weights = _load_weights(cfg)
        spec, params = weights.spec(), weights.params()
    else:
        spec, params, history, _ = _train_model(cfg, data, cfg.model, cfg.encoding)
        _atomic_with(cfg.out_dir / "history.csv", history.to_csv)
    if spec.n_features != 1:
        raise ConfigurationError("recursive forecasting needs a single-feature model")
    target = data.series[cfg.target_col]
    actuals = None
    if cfg.seed_at == "split":
        boundary = data.test.offset
        seed_window, actuals = target[: boundary + 1], target[boundary + 1 :]
    else:
        seed_window = target
    result = recursive_forecast(spec, params, seed_window, cfg.horizon, data.stats, cfg.target_col, actuals)
    _result_artifacts(cfg, result, "forecast")
    lines = {"mode": "recursive", "horizon": cfg.horizon, "noise_sigma": cfg.noise_sigma,
             "truncation_warnings": result.truncation_warnings}
    if result.metrics is not None:
        lines.update({k: v for k, v in _metric_lines(result).items() if k != "truncation_warnings"})
    _summary(cfg, lines)
    return 0


def benchmark_rows(cfg: RunConfig, data: dp.PreparedData) -> list[dict]:
    rows = []
    for kind, encoding in BENCH_ROSTER:
        spec, params, history, _ = _train_model(cfg, data, kind, encoding)
        result = predict_series(spec, params, data.test, data.stats)
        rows.append({
            "model": kind, "encoding": encoding or "displacement", "wires": spec.wires,
            "params": spec.n_params, "cost": history.cost[-1],
            "test_mse": result.metrics.mse, "pct_rmse": result.metrics.pct_rmse,
        })
    return rows


def format_table(rows: list[dict]) -> str:
    cols = list(rows[0])
    cells = [[_fmt(r[c]) for c in cols] for r in rows]
    widths = [max(len(c), *(len(row[i]) for row in cells)) for i, c in enumerate(cols)]
    out = ["  ".join(c.ljust(w) for c, w in zip(cols, widths))]
    out += ["  ".join(v.ljust(w) for v, w in zip(row, widths)) for row in cells]
    return "\n".join(out) + "\n"


def cmd_benchmark(cfg: RunConfig) -> int:
    data = _prepared(cfg)
    rows = benchmark_rows(cfg, data)
    header = ",".join(rows[0])
    body = "".join(",".join(repr(v) if isinstance(v, float) else str(v) for v in r.values()) + "\n" for r in rows)
    _write_text(cfg.out_dir / "benchmark.csv", header + "\n" + body)
    table = format_table(rows)
    _write_text(cfg.out_dir / "benchmark.txt", table)
    sys.stdout.write(table)
    return 0


def cmd_draw(cfg: RunConfig) -> int:
    spec = build_model(cfg.model, 1, cfg.encoding)
    sys.stdout.write(draw(spec) + "\n")
    return 0


def cmd_synth(cfg: RunConfig, ns: argparse.Namespace) -> int:
    series = dp.synthetic_sine(ns.n, ns.period, ns.amplitude, ns.offset, ns.phase)
    path = Path(ns.output).resolve()
    _atomic_with(path, lambda tmp: dp.write_series_csv(series, tmp))
    sys.stdout.write(f"wrote {len(series)} rows to {path}\n")
    return 0


# --- parser -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qforecast", description="Quantum neural network time-series forecasting")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def data_args(p):
        p.add_argument("--dataset", help="CSV file with a header row")
        p.add_argument("--target-col", default="value")
        p.add_argument("--feature-cols", help="comma-separated feature columns (default: the target)")
        p.add_argument("--split", default="ratio:0.8", help="ratio:R or boundary:N")
        p.add_argument("--recent", type=int, help="train only on the last N rows before the split")
        p.add_argument("--out-dir", help=f"output directory (default ${OUT_ENV} or ./qforecast_out)")

    def train_args(p):
        p.add_argument("--model", choices=MODELS, default="cv2")
        p.add_argument("--encoding", choices=("angle", "amplitude"), default="angle")
        p.add_argument("--cutoff", type=int)
        p.add_argument("--epochs", type=int)
        p.add_argument("--lr", type=float)
        p.add_argument("--batch", type=int)
        p.add_argument("--seed", type=int)
        p.add_argument("--noise-sigma", type=float, default=0.0)

    p = sub.add_parser("train", help="train a model and save its weights")
    data_args(p)
    train_args(p)
    p.add_argument("--weights-out")

    p = sub.add_parser("predict", help="one-step predictions on the test split")
    data_args(p)
    p.add_argument("--weights-in", required=True)

    p = sub.add_parser("transfer", help="apply pretrained weights to a new dataset")
    data_args(p)
    train_args(p)
    p.add_argument("--weights-in", required=True, help="weights file or bundled:model1|model2|model3")
    p.add_argument("--weights-out")
    p.add_argument("--fine-tune", type=int, default=0, metavar="N")

    p = sub.add_parser("forecast", help="recursive multi-step forecast")
    data_args(p)
    train_args(p)
    p.add_argument("--weights-in")
    p.add_argument("--horizon", type=int, default=1)
    p.add_argument("--seed-at", choices=("end", "split"), default="end")

    p = sub.add_parser("benchmark", help="compare CV2 with the DV models")
    data_args(p)
    train_args(p)

    p = sub.add_parser("draw", help="print a text circuit diagram")
    p.add_argument("--model", choices=MODELS + ("cv_generic",), required=True)
    p.add_argument("--encoding", choices=("angle", "amplitude"), default="angle")
    p.add_argument("--out-dir")

    p = sub.add_parser("synth", help="write a synthetic sine series CSV")
    p.add_argument("output")
    p.add_argument("--n", type=int, default=500)
    p.add_argument("--period", type=float, default=50.0)
    p.add_argument("--amplitude", type=float, default=0.4)
    p.add_argument("--offset", type=float, default=0.5)
    p.add_argument("--phase", type=float, default=0.0)
    p.add_argument("--out-dir")
    return parser


COMMANDS = {
    "train": cmd_train,
    "predict": cmd_predict,
    "transfer": cmd_transfer,
    "forecast": cmd_forecast,
    "benchmark": cmd_benchmark,
    "draw": cmd_draw,
}


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        cfg = RunConfig.from_args(ns)
        if ns.command == "synth":
            return cmd_synth(cfg, ns)
        return COMMANDS[ns.command](cfg)
    except QForecastError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except (FileNotFoundError, IsADirectoryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

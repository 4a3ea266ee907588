"""Square loss, gradients, Adam, threshold learning-rate decay and the
training loop."""

from __future__ import annotations

import csv
import hashlib
import json
import math
import warnings
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .errors import ConfigurationError, TrainingError, TruncationWarning, UsageError
from .qnn_models import CircuitSpec, ParamVector, evaluate_batch

DEFAULT_EPOCHS = {"cv1": 20, "cv2": 50, "cv3": 100}
INIT_HALF_WIDTH = 0.05


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.005
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    epochs: int = 50
    batch_size: int = 32
    seed: int = 0
    cutoff: int = 12
    lr_thresholds: tuple = (0.002, 0.0016)
    lr_factor: float = 0.5
    grad_method: str = "finite_diff"
    fd_step: float = 1e-4
    early_stop_patience: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "lr_thresholds", tuple(float(t) for t in self.lr_thresholds))
        if not self.learning_rate > 0:
            raise ConfigurationError("learning_rate must be positive")
        if not (0 < self.beta1 < 1 and 0 < self.beta2 < 1):
            raise ConfigurationError("beta1 and beta2 must lie in (0, 1)")
        if self.epochs < 1 or self.batch_size < 1:
            raise ConfigurationError("epochs and batch_size must be >= 1")
        if any(a <= b for a, b in zip(self.lr_thresholds, self.lr_thresholds[1:])):
            raise ConfigurationError("lr_thresholds must be strictly descending")
        if self.grad_method not in ("finite_diff", "param_shift"):
            raise ConfigurationError(f"unknown grad_method {self.grad_method!r}")
        if self.seed < 0:
            raise ConfigurationError("seed must be unsigned")

    @classmethod
    def for_model(cls, kind: str, **overrides) -> "TrainConfig":
        if "epochs" not in overrides and kind in DEFAULT_EPOCHS:
            overrides["epochs"] = DEFAULT_EPOCHS[kind]
        if "grad_method" not in overrides and kind.startswith("dv"):
            overrides["grad_method"] = "param_shift"
        return cls(**overrides)

    def digest(self) -> str:
        blob = json.dumps(asdict(self), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


@dataclass(frozen=True)
class AdamState:
    first_moment: np.ndarray
    second_moment: np.ndarray
    step_count: int = 0

    @classmethod
    def fresh(cls, n: int) -> "AdamState":
        return cls(np.zeros(n), np.zeros(n), 0)


@dataclass
class TrainHistory:
    cost: list = field(default_factory=list)
    lr: list = field(default_factory=list)
    params: ParamVector | None = None
    stopped_early: bool = False
    initial_cost: float | None = None
    truncation_warnings: int = 0

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["epoch", "cost", "lr"])
            for i, (c, lr) in enumerate(zip(self.cost, self.lr), start=1):
                w.writerow([i, repr(c), repr(lr)])


def square_loss(predictions, labels) -> float:
    p = np.asarray(predictions, dtype=float).reshape(-1)
    y = np.asarray(labels, dtype=float).reshape(-1)
    if p.size != y.size or p.size == 0:
        raise UsageError(f"square_loss needs equal nonzero lengths, got {p.size} and {y.size}")
    # fsum keeps the result independent of reduction order
    return math.fsum(((p - y) ** 2).tolist()) / p.size


def batch_loss(spec: CircuitSpec, params: ParamVector, X, y) -> float:
    return square_loss(evaluate_batch(spec, params, X), y)


def _shifted(params: ParamVector, i: int, delta: float) -> ParamVector:
    vals = params.values.copy()
    vals[i] += delta
    return ParamVector(vals, params.names)


def _check_param_shift(spec: CircuitSpec) -> None:
    if spec.backend != "dv":
        raise ConfigurationError("param_shift applies only to DV circuits; use finite_diff for CV")
    uses = {}
    for g in spec.gates:
        for b in g.bindings:
            if b.source == "trainable":
                if g.kind not in ("RX", "RY", "RZ") or b.scale != 1.0:
                    raise ConfigurationError(f"slot {b.slot} is not a plain rotation angle")
                uses[b.slot] = uses.get(b.slot, 0) + 1
    shared = [s for s, n in uses.items() if n > 1]
    if shared:
        raise ConfigurationError(f"param_shift needs each slot in one gate; shared: {shared}")


def gradient(spec: CircuitSpec, params: ParamVector, batch, method: str = "finite_diff", fd_step: float = 1e-4) -> np.ndarray:
    """d(mean square loss)/d(params) on ``batch = (X, y)``.

    ``finite_diff`` is a central difference on the loss. ``param_shift``
    shifts each rotation by +-pi/2 to get exact output derivatives, then
    applies the square-loss chain rule.
    """
    X, y = batch
    y = np.asarray(y, dtype=float).reshape(-1)
    n = params.values.size
    grad = np.zeros(n)
    if method == "finite_diff":
        if not fd_step > 0:
            raise ConfigurationError("fd_step must be positive")
        for i in range(n):
            up = batch_loss(spec, _shifted(params, i, fd_step), X, y)
            down = batch_loss(spec, _shifted(params, i, -fd_step), X, y)
            grad[i] = (up - down) / (2 * fd_step)
        return grad
    if method == "param_shift":
        _check_param_shift(spec)
        f = evaluate_batch(spec, params, X)
        resid = 2.0 * (f - y)
        for i in range(n):
            df = (
                evaluate_batch(spec, _shifted(params, i, math.pi / 2), X)
                - evaluate_batch(spec, _shifted(params, i, -math.pi / 2), X)
            ) / 2.0
            grad[i] = math.fsum((resid * df).tolist()) / y.size
        return grad
    raise ConfigurationError(f"unknown gradient method {method!r}")


def adam_step(state: AdamState, params, grads, config: TrainConfig, lr: float | None = None, slot_names=None):
    """One bias-corrected Adam update. Returns (new params array, new state)."""
    theta = np.asarray(params, dtype=float)
    g = np.asarray(grads, dtype=float)
    if theta.shape != g.shape or state.first_moment.shape != g.shape:
        raise UsageError("params, grads and Adam moments must have equal lengths")
    bad = np.flatnonzero(~np.isfinite(g))
    if bad.size:
        names = [slot_names[i] for i in bad] if slot_names else bad.tolist()
        raise TrainingError(f"non-finite gradient for slot(s) {names}")
    lr = config.learning_rate if lr is None else lr
    t = state.step_count + 1
    m = config.beta1 * state.first_moment + (1 - config.beta1) * g
    v = config.beta2 * state.second_moment + (1 - config.beta2) * g**2
    m_hat = m / (1 - config.beta1**t)
    v_hat = v / (1 - config.beta2**t)
    new = theta - lr * m_hat / (np.sqrt(v_hat) + config.epsilon)
    return new, AdamState(m, v, t)


def lr_schedule(epoch_cost: float, current_lr: float, config: TrainConfig, consumed: set | None = None) -> float:
    """Halve (by ``lr_factor``) once for each threshold the cost has dropped
    below. ``consumed`` tracks indices of thresholds that already fired and
    is updated in place."""
    if epoch_cost < 0:
        raise UsageError("cost must be non-negative")
    if consumed is None:
        consumed = set()
    lr = current_lr
    for i, threshold in enumerate(config.lr_thresholds):
        if i not in consumed and epoch_cost < threshold:
            lr *= config.lr_factor
            consumed.add(i)
    return lr


def init_params(spec: CircuitSpec, rng: np.random.Generator) -> ParamVector:
    return ParamVector(rng.uniform(-INIT_HALF_WIDTH, INIT_HALF_WIDTH, spec.n_params), spec.slots)


def train(spec: CircuitSpec, dataset, config: TrainConfig, initial: ParamVector | None = None, callback=None):
    """Mini-batch Adam on the square loss; returns (params, TrainHistory).

    The generator is numpy's PCG64 seeded with ``config.seed``; it draws the
    initial parameters (unless ``initial`` is given) and then the per-epoch
    shuffles, so a run is fully determined by (seed, config, dataset).
    """
    X = np.asarray(dataset.inputs, dtype=float)
    y = np.asarray(dataset.labels, dtype=float)
    if len(y) == 0:
        raise UsageError("cannot train on an empty dataset")
    if config.grad_method == "param_shift":
        _check_param_shift(spec)
    rng = np.random.Generator(np.random.PCG64(config.seed))
    params = init_params(spec, rng) if initial is None else initial
    if tuple(params.names) != spec.slots:
        raise UsageError("initial parameters do not match the circuit slots")
    history = TrainHistory()
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", TruncationWarning)
        history.initial_cost = batch_loss(spec, params, X, y)
        history.params = params
        adam = AdamState.fresh(spec.n_params)
        lr = config.learning_rate
        consumed: set = set()
        best, stale, diverged = math.inf, 0, 0
        n = len(y)
        for epoch in range(config.epochs):
            order = rng.permutation(n)
            for start in range(0, n, config.batch_size):
                idx = order[start : start + config.batch_size]
                grads = gradient(spec, params, (X[idx], y[idx]), config.grad_method, config.fd_step)
                vals, adam = adam_step(adam, params.values, grads, config, lr, spec.slots)
                params = ParamVector(vals, spec.slots)
            cost = batch_loss(spec, params, X, y)
            history.cost.append(cost)
            history.lr.append(lr)
            history.params = params
            if callback is not None:
                callback(epoch, cost, lr)
            if not math.isfinite(cost):
                raise TrainingError(f"cost became non-finite at epoch {epoch + 1}", history)
            diverged = diverged + 1 if cost > 10 * history.initial_cost else 0
            if diverged >= 3:
                raise TrainingError(f"training diverged (cost {cost:.4g} > 10x initial)", history)
            lr = lr_schedule(cost, lr, config, consumed)
            if config.early_stop_patience is not None:
                if cost < best - 1e-6:
                    best, stale = cost, 0
                else:
                    stale += 1
                    if stale >= config.early_stop_patience:
                        history.stopped_early = True
                        break
        history.truncation_warnings = len(caught)
    return params, history


def with_overrides(config: TrainConfig, **kw) -> TrainConfig:
    return replace(config, **{k: v for k, v in kw.items() if v is not None})

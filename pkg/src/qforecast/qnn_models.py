"""Circuit specifications for the CV and DV forecasting models.

A circuit is an ordered tuple of :class:`GateOp`. Every gate parameter is a
:class:`Binding`: a fixed value, a named trainable slot, or an input feature.
Gate layouts are canonical for this package; slot names are part of the
serialized weights format and must not change.

CV gate labels: D (displacement, polar r/phi), R, S, BS (theta, phi), K, CK, V.
DV gate labels: H, RX, RY, RZ, CNOT, and AMP (amplitude-encoding state prep).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import fock_sim, qubit_sim
from ._tensor import contract
from .errors import ConfigurationError, UsageError

DEFAULT_CUTOFF = 12
CV_KINDS = ("cv1", "cv2", "cv3")
DV_KINDS = ("dv2", "dv4")
MODEL_KINDS = CV_KINDS + ("cv_generic",) + DV_KINDS
ENCODINGS = ("angle", "amplitude")

_CV_GATES = {
    "D": "displacement",
    "R": "rotation",
    "S": "squeezing",
    "BS": "beamsplitter",
    "K": "kerr",
    "CK": "cross_kerr",
    "V": "cubic_phase",
}
_DV_GATES = ("H", "RX", "RY", "RZ", "CNOT", "AMP")
_N_PARAMS = {"D": 2, "R": 1, "S": 1, "BS": 2, "K": 1, "CK": 1, "V": 1, "H": 0, "RX": 1, "RY": 1, "RZ": 1, "CNOT": 0}


@dataclass(frozen=True)
class Binding:
    source: str  # "fixed" | "trainable" | "input"
    value: float = 0.0
    slot: str | None = None
    index: int | None = None
    scale: float = 1.0

    def label(self) -> str:
        prefix = "-" if self.scale == -1 else ("" if self.scale == 1 else f"{self.scale:g}*")
        if self.source == "trainable":
            return prefix + self.slot
        if self.source == "input":
            return prefix + f"x{self.index}"
        return f"{self.value:.4g}"


def fixed(value: float) -> Binding:
    return Binding("fixed", value=float(value))


def trainable(slot: str, scale: float = 1.0) -> Binding:
    return Binding("trainable", slot=slot, scale=scale)


def inp(index: int, scale: float = 1.0) -> Binding:
    return Binding("input", index=index, scale=scale)


@dataclass(frozen=True)
class GateOp:
    kind: str
    wires: tuple
    bindings: tuple = ()

    @property
    def is_trainable(self) -> bool:
        return any(b.source == "trainable" for b in self.bindings)

    @property
    def uses_input(self) -> bool:
        return any(b.source == "input" for b in self.bindings)


def _op(kind: str, wires, *bindings) -> GateOp:
    return GateOp(kind, tuple(wires), tuple(bindings))


@dataclass(frozen=True)
class CircuitSpec:
    kind: str
    backend: str
    wires: int
    n_features: int
    gates: tuple
    slots: tuple
    cutoff: int | None = None
    encoding: str | None = None

    def __post_init__(self):
        if self.backend not in ("cv", "dv"):
            raise ConfigurationError(f"unknown backend {self.backend!r}")
        if len(set(self.slots)) != len(self.slots):
            raise ConfigurationError("trainable slot names must be unique")
        used = set()
        for g in self.gates:
            if self.backend == "cv" and g.kind not in _CV_GATES:
                raise ConfigurationError(f"{g.kind} is not a CV gate")
            if self.backend == "dv" and g.kind not in _DV_GATES:
                raise ConfigurationError(f"{g.kind} is not a DV gate")
            if g.kind != "AMP" and len(g.bindings) != _N_PARAMS[g.kind]:
                raise ConfigurationError(f"{g.kind} takes {_N_PARAMS[g.kind]} parameter(s)")
            for w in g.wires:
                if not 0 <= w < self.wires:
                    raise ConfigurationError(f"gate {g.kind} on wire {w} outside {self.wires} wire(s)")
            for b in g.bindings:
                if b.source == "trainable":
                    if b.slot not in self.slots:
                        raise ConfigurationError(f"undeclared slot {b.slot!r}")
                    used.add(b.slot)
                elif b.source == "input" and not 0 <= b.index < self.n_features:
                    raise ConfigurationError(f"input index {b.index} >= n_features={self.n_features}")
        if used != set(self.slots):
            raise ConfigurationError(f"declared slots never used: {sorted(set(self.slots) - used)}")
        if self.backend == "cv" and (self.cutoff is None or self.cutoff < 2):
            raise ConfigurationError("CV circuits need a cutoff >= 2")

    @property
    def n_params(self) -> int:
        return len(self.slots)


@dataclass(frozen=True)
class ParamVector:
    values: np.ndarray
    names: tuple

    def __post_init__(self):
        vals = np.array(self.values, dtype=float).reshape(-1)
        if vals.size != len(self.names):
            raise UsageError(f"{vals.size} values for {len(self.names)} slot(s)")
        if not np.all(np.isfinite(vals)):
            raise UsageError("parameter values must be finite")
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "names", tuple(self.names))

    @classmethod
    def for_spec(cls, spec: CircuitSpec, values) -> "ParamVector":
        return cls(np.asarray(values, dtype=float), spec.slots)

    @classmethod
    def zeros(cls, spec: CircuitSpec) -> "ParamVector":
        return cls(np.zeros(spec.n_params), spec.slots)

    def as_dict(self) -> dict:
        return dict(zip(self.names, self.values.tolist()))

    def replace(self, **updates) -> "ParamVector":
        d = self.as_dict()
        for k, v in updates.items():
            if k not in d:
                raise UsageError(f"unknown slot {k!r}")
            d[k] = v
        return ParamVector(np.array([d[n] for n in self.names]), self.names)


PARAM_COUNTS = {"cv1": 8, "cv2": 6, "cv3": 4, "dv2": 4, "dv4": 8}


def param_count(kind: str, modes: int | None = None) -> int:
    if kind == "cv_generic":
        if modes is None or modes < 1:
            raise ConfigurationError("cv_generic needs modes >= 1")
        return 8 * modes - 2
    try:
        return PARAM_COUNTS[kind]
    except KeyError:
        raise ConfigurationError(f"unknown model kind {kind!r}") from None


# --- builders ---------------------------------------------------------------

_QUARTER = math.pi / 2


def _cv_tail() -> list:
    return [
        _op("R", [0], fixed(_QUARTER)),
        _op("S", [0], trainable("squeeze_r")),
        _op("R", [0], trainable("rot_phi")),
        _op("D", [0], trainable("bias_b"), fixed(0.0)),
        _op("V", [0], trainable("cubic_gamma")),
    ]


def _ancilla_encoding(n_features: int, ancilla: str) -> list:
    if n_features == 2:
        return [_op("D", [1], inp(1), fixed(0.0))]
    if ancilla == "duplicate":
        return [_op("D", [1], inp(0), fixed(0.0))]
    if ancilla == "vacuum":
        return []
    raise ConfigurationError(f"ancilla must be 'duplicate' or 'vacuum', got {ancilla!r}")


def build_cv_model(kind: str, n_features: int = 1, cutoff: int = DEFAULT_CUTOFF, ancilla: str = "duplicate") -> CircuitSpec:
    """Model-1/2/3 circuits.

    ``cv2``: encodings, BS, then R(pi/2) S R D V on wire 0 (6 trainable).
    ``cv1``: wire 1 also gets a fixed D(1, pi/2); wire 0 runs S R S (second
    squeeze negated), a cross-Kerr couples the wires, then D V (8 trainable).
    ``cv3``: single wire D S R D V (4 trainable).
    """
    kind = kind.lower()
    if kind == "cv3":
        if n_features != 1:
            raise ConfigurationError("cv3 is a single-wire model and takes exactly one feature")
        gates = [
            _op("D", [0], inp(0), fixed(0.0)),
            _op("S", [0], trainable("squeeze_r")),
            _op("R", [0], trainable("rot_phi")),
            _op("D", [0], trainable("bias_b"), fixed(0.0)),
            _op("V", [0], trainable("cubic_gamma")),
        ]
        slots = ("squeeze_r", "rot_phi", "bias_b", "cubic_gamma")
        return CircuitSpec("cv3", "cv", 1, 1, tuple(gates), slots, cutoff)
    if kind not in ("cv1", "cv2"):
        raise ConfigurationError(f"unknown CV model {kind!r}")
    if n_features not in (1, 2):
        raise ConfigurationError(f"{kind} takes 1 or 2 features; use extend_cv_model for more")
    gates = [_op("D", [0], inp(0), fixed(0.0))] + _ancilla_encoding(n_features, ancilla)
    bs = _op("BS", [0, 1], trainable("bs_theta"), trainable("bs_phi"))
    if kind == "cv2":
        gates += [bs] + _cv_tail()
        slots = ("bs_theta", "bs_phi", "squeeze_r", "rot_phi", "bias_b", "cubic_gamma")
    else:
        gates += [
            _op("D", [1], fixed(1.0), fixed(_QUARTER)),
            bs,
            _op("S", [0], trainable("squeeze_r1")),
            _op("R", [0], trainable("rot_phi")),
            _op("S", [0], trainable("squeeze_r2", scale=-1.0)),
            _op("CK", [0, 1], trainable("cross_kerr")),
            _op("D", [0], trainable("bias_b"), fixed(0.0)),
            _op("V", [0], trainable("cubic_gamma")),
        ]
        slots = ("bs_theta", "bs_phi", "squeeze_r1", "rot_phi", "squeeze_r2", "cross_kerr", "bias_b", "cubic_gamma")
    return CircuitSpec(kind, "cv", 2, n_features, tuple(gates), slots, cutoff)


def extend_cv_model(n_features: int, base: str = "cv2", cutoff: int = DEFAULT_CUTOFF, shared_bs: bool = True) -> CircuitSpec:
    """Model-2 on ``n_features`` wires; wire 0 carries the primary feature and
    is coupled to every other wire by its own beamsplitter."""
    if base != "cv2":
        raise ConfigurationError("only cv2 can be extended to more wires")
    if n_features < 3:
        raise ConfigurationError("extend_cv_model needs n_features >= 3; use build_cv_model")
    gates = [_op("D", [k], inp(k), fixed(0.0)) for k in range(n_features)]
    bs_slots = []
    for k in range(1, n_features):
        suffix = "" if shared_bs else f"_{k}"
        theta, phi = f"bs_theta{suffix}", f"bs_phi{suffix}"
        if not shared_bs or k == 1:
            bs_slots += [theta, phi]
        gates.append(_op("BS", [0, k], trainable(theta), trainable(phi)))
    gates += _cv_tail()
    slots = tuple(bs_slots) + ("squeeze_r", "rot_phi", "bias_b", "cubic_gamma")
    return CircuitSpec("cv2", "cv", n_features, n_features, tuple(gates), slots, cutoff)


def _interferometer(m: int, tag: str) -> tuple[list, list]:
    gates, slots = [], []
    for k in range(m - 1):
        name = f"{tag}_theta{k}"
        gates.append(_op("BS", [k, k + 1], trainable(name), fixed(0.0)))
        slots.append(name)
    for i in range(m):
        name = f"{tag}_phi{i}"
        gates.append(_op("R", [i], trainable(name)))
        slots.append(name)
    return gates, slots


def build_generic_cv_layer(m: int, cutoff: int = DEFAULT_CUTOFF) -> CircuitSpec:
    """One CV neural unit on ``m`` modes with 8m - 2 trainable parameters.

    Interferometers are a nearest-neighbour BS chain (theta only) followed by
    per-mode rotations, so a single mode reduces to one rotation. The
    displacement is complex (magnitude and phase), hence four per-mode slots
    for squeeze, displacement and Kerr together.
    """
    if m < 1:
        raise ConfigurationError(f"generic layer needs m >= 1, got {m}")
    gates = [_op("D", [i], inp(i), fixed(0.0)) for i in range(m)]
    slots = []
    g, s = _interferometer(m, "u1")
    gates += g
    slots += s
    for i in range(m):
        gates.append(_op("S", [i], trainable(f"squeeze_r{i}")))
        slots.append(f"squeeze_r{i}")
    g, s = _interferometer(m, "u2")
    gates += g
    slots += s
    for i in range(m):
        gates.append(_op("D", [i], trainable(f"disp_r{i}"), trainable(f"disp_phi{i}")))
        slots += [f"disp_r{i}", f"disp_phi{i}"]
    for i in range(m):
        gates.append(_op("K", [i], trainable(f"kerr{i}")))
        slots.append(f"kerr{i}")
    return CircuitSpec("cv_generic", "cv", m, m, tuple(gates), tuple(slots), cutoff)


def _dv_encoding(encoding: str, n_features: int, wires: int) -> list:
    if encoding == "angle":
        if n_features > wires:
            raise ConfigurationError(f"angle encoding fits at most {wires} feature(s)")
        return [_op("RY", [i], inp(i, scale=math.pi)) for i in range(n_features)]
    if encoding == "amplitude":
        if n_features + 1 > 2**wires:
            raise ConfigurationError(f"amplitude encoding fits at most {2**wires - 1} feature(s)")
        # constant 1 after the features keeps the vector nonzero at x = 0
        bindings = tuple(inp(i) for i in range(n_features)) + (fixed(1.0),)
        return [GateOp("AMP", tuple(range(wires)), bindings)]
    raise ConfigurationError(f"unknown encoding {encoding!r}")


def _dv_rotations(w0: int, w1: int) -> tuple[list, tuple]:
    gates = [
        _op("RY", [w0], fixed(_QUARTER)),
        _op("RZ", [w0], trainable(f"rz{w0}")),
        _op("RY", [w0], trainable(f"ry{w0}")),
        _op("RX", [w1], trainable(f"rx{w1}")),
        _op("RZ", [w1], trainable(f"rz{w1}")),
    ]
    return gates, (f"rz{w0}", f"ry{w0}", f"rx{w1}", f"rz{w1}")


def build_dv_model(kind: str, encoding: str = "angle", n_features: int = 1) -> CircuitSpec:
    """Qubit models. ``dv2``: H on both wires, CNOT, RY(pi/2) RZ RY on wire 0,
    RX RZ on wire 1, closing CNOT. ``dv4`` runs two such blocks on (0,1) and
    (2,3) with cross-block CNOT(1->2) and CNOT(3->0) after the first
    entangling layer."""
    kind = kind.lower()
    if kind not in DV_KINDS:
        raise ConfigurationError(f"unknown DV model {kind!r}")
    wires = 2 if kind == "dv2" else 4
    gates = _dv_encoding(encoding, n_features, wires)
    gates += [_op("H", [w]) for w in range(wires)]
    pairs = [(0, 1)] if kind == "dv2" else [(0, 1), (2, 3)]
    gates += [_op("CNOT", p) for p in pairs]
    if kind == "dv4":
        gates += [_op("CNOT", [1, 2]), _op("CNOT", [3, 0])]
    slots = ()
    for w0, w1 in pairs:
        g, s = _dv_rotations(w0, w1)
        gates += g
        slots += s
    gates += [_op("CNOT", p) for p in pairs]
    return CircuitSpec(kind, "dv", wires, n_features, tuple(gates), slots, encoding=encoding)


def build_model(kind: str, n_features: int = 1, encoding: str = "angle", cutoff: int = DEFAULT_CUTOFF, **kwargs) -> CircuitSpec:
    kind = kind.lower()
    if kind in CV_KINDS:
        if kind == "cv2" and n_features >= 3:
            return extend_cv_model(n_features, cutoff=cutoff, **kwargs)
        return build_cv_model(kind, n_features, cutoff=cutoff, **kwargs)
    if kind == "cv_generic":
        return build_generic_cv_layer(n_features, cutoff=cutoff)
    if kind in DV_KINDS:
        return build_dv_model(kind, encoding, n_features)
    raise ConfigurationError(f"unknown model kind {kind!r}")


# --- evaluation -------------------------------------------------------------


def _resolve(b: Binding, slot_values: dict, X: np.ndarray):
    if b.source == "fixed":
        return b.value
    if b.source == "trainable":
        return b.scale * slot_values[b.slot]
    return b.scale * X[:, b.index]


def _cv_matrix(kind: str, vals, cutoff: int) -> np.ndarray:
    if kind == "D":
        r, phi = vals
        alpha = r if phi == 0 else r * complex(math.cos(phi), math.sin(phi))
        return fock_sim.gate_matrix("displacement", [alpha], cutoff).entries
    return fock_sim.gate_matrix(_CV_GATES[kind], list(vals), cutoff).entries


def _cv_batched(kind: str, resolved, batch: int, cutoff: int) -> np.ndarray:
    cols = [np.broadcast_to(np.asarray(v, dtype=float), (batch,)) for v in resolved]
    cache = {}
    mats = []
    for row in zip(*cols):
        key = tuple(float(v) for v in row)
        if key not in cache:
            cache[key] = _cv_matrix(kind, key, cutoff)
        mats.append(cache[key])
    return np.stack(mats)


def _leading_input_ops(spec: CircuitSpec) -> int:
    n = 0
    for g in spec.gates:
        if g.is_trainable:
            break
        n += 1
    return n


@lru_cache(maxsize=64)
def _prefix_state(spec: CircuitSpec, x_bytes: bytes, shape: tuple) -> np.ndarray:
    X = np.frombuffer(x_bytes, dtype=float).reshape(shape)
    psi = _initial(spec, X)
    psi = _run(spec, spec.gates[: _leading_input_ops(spec)], {}, X, psi)
    psi.flags.writeable = False
    return psi


def _initial(spec: CircuitSpec, X: np.ndarray) -> np.ndarray:
    batch = X.shape[0]
    if spec.backend == "cv":
        psi = np.zeros((batch,) + (spec.cutoff,) * spec.wires, dtype=complex)
    else:
        psi = np.zeros((batch,) + (2,) * spec.wires, dtype=complex)
    psi[(slice(None),) + (0,) * spec.wires] = 1.0
    return psi


def _run(spec: CircuitSpec, gates, slot_values: dict, X: np.ndarray, psi: np.ndarray) -> np.ndarray:
    batch = X.shape[0]
    for g in gates:
        resolved = [_resolve(b, slot_values, X) for b in g.bindings]
        if spec.backend == "cv":
            if g.uses_input:
                psi = contract(psi, _cv_batched(g.kind, resolved, batch, spec.cutoff), g.wires, spec.cutoff, True)
            else:
                psi = contract(psi, _cv_matrix(g.kind, resolved, spec.cutoff), g.wires, spec.cutoff)
        elif g.kind == "AMP":
            feats = np.column_stack([np.broadcast_to(np.asarray(v, dtype=float), (batch,)) for v in resolved])
            amps = np.stack([qubit_sim.amplitude_vector(row, spec.wires) for row in feats])
            psi = amps.reshape(psi.shape)
        elif g.kind in ("H", "CNOT"):
            psi = contract(psi, qubit_sim.gate_matrix(g.kind), g.wires, 2)
        else:
            (angle,) = resolved
            batched = np.ndim(angle) > 0
            psi = contract(psi, qubit_sim.gate_matrix(g.kind, angle), g.wires, 2, batched)
    return psi


def forward(spec: CircuitSpec, params: ParamVector, X) -> tuple[np.ndarray, np.ndarray]:
    """Batched forward pass. Returns (outputs, final state norms)."""
    X = np.ascontiguousarray(np.asarray(X, dtype=float))
    if X.ndim == 1:
        X = X.reshape(-1, spec.n_features)
    if X.ndim != 2 or X.shape[1] != spec.n_features:
        raise UsageError(f"expected feature rows of length {spec.n_features}, got shape {X.shape}")
    if tuple(params.names) != spec.slots:
        raise UsageError(f"parameter slots {params.names} do not match circuit slots {spec.slots}")
    slot_values = dict(zip(params.names, params.values.tolist()))
    n_prefix = _leading_input_ops(spec)
    psi = _prefix_state(spec, X.tobytes(), X.shape)
    psi = _run(spec, spec.gates[n_prefix:], slot_values, X, psi)
    norms = np.sum(np.abs(psi.reshape(psi.shape[0], -1)) ** 2, axis=1)
    if spec.backend == "cv":
        fock_sim.check_drift(norms)
        return fock_sim.batch_quadrature(psi, 0, spec.cutoff), norms
    return (1.0 - qubit_sim.batch_z(psi, 0)) / 2.0, norms


def evaluate_batch(spec: CircuitSpec, params: ParamVector, X) -> np.ndarray:
    return forward(spec, params, X)[0]


def evaluate(spec: CircuitSpec, params: ParamVector, features) -> float:
    """Model output for one feature vector: <x> on wire 0 (CV) or
    (1 - <Z_0>) / 2 (DV)."""
    features = np.asarray(features, dtype=float).reshape(-1)
    if features.size != spec.n_features:
        raise UsageError(f"expected {spec.n_features} feature(s), got {features.size}")
    return float(evaluate_batch(spec, params, features[None, :])[0])


# --- drawing ----------------------------------------------------------------


def _gate_label(g: GateOp, role: int) -> str:
    if g.kind == "CNOT":
        return "CNOT(c)" if role == 0 else "CNOT(t)"
    if g.kind == "AMP":
        return "AMP(" + ",".join(b.label() for b in g.bindings) + ")"
    args = ",".join(b.label() for b in g.bindings)
    return f"{g.kind}({args})" if args else g.kind


def draw(spec: CircuitSpec) -> str:
    """Fixed-width text diagram, one row per wire, gates in execution order."""
    rows = [f"{w}: " for w in range(spec.wires)]
    for g in spec.gates:
        labels = {w: _gate_label(g, i) for i, w in enumerate(g.wires)}
        width = max(len(s) for s in labels.values())
        lo, hi = min(g.wires), max(g.wires)
        for w in range(spec.wires):
            if w in labels:
                cell = labels[w].ljust(width, "─")
            elif lo < w < hi and len(g.wires) > 1 and g.kind != "AMP":
                cell = "│".ljust(width, "─")
            else:
                cell = "─" * width
            rows[w] += "──" + cell
    return "\n".join(r + "──" for r in rows)

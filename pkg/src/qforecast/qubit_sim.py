"""Dense statevector simulation for the small (2-4 qubit) DV models.

Wire 0 is the most significant bit of the basis index. Rotations use the
half-angle convention, RY(theta) = exp(-i theta Y / 2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._tensor import contract
from .errors import DataError, UsageError

MAX_QUBITS = 4
ONE_QUBIT = ("H", "RX", "RY", "RZ")
KINDS = ONE_QUBIT + ("CNOT",)

_H = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
_CNOT = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]],
    dtype=complex,
)


@dataclass(frozen=True)
class QubitState:
    amplitudes: np.ndarray
    n_qubits: int

    def __post_init__(self):
        if not 1 <= self.n_qubits <= MAX_QUBITS:
            raise UsageError(f"supported qubit counts are 1..{MAX_QUBITS}, got {self.n_qubits}")
        if self.amplitudes.shape != (2**self.n_qubits,):
            raise UsageError(f"expected {2**self.n_qubits} amplitudes, got {self.amplitudes.shape}")
        self.amplitudes.flags.writeable = False

    @property
    def norm(self) -> float:
        return float(np.sum(np.abs(self.amplitudes) ** 2))

    @classmethod
    def zero(cls, n_qubits: int) -> "QubitState":
        amps = np.zeros(2**n_qubits, dtype=complex)
        amps[0] = 1.0
        return cls(amps, n_qubits)


@dataclass(frozen=True)
class QubitGate:
    kind: str
    wires: tuple
    angle: float | None = field(default=None)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise UsageError(f"unknown qubit gate {self.kind!r}")
        object.__setattr__(self, "wires", tuple(int(w) for w in self.wires))
        arity = 2 if self.kind == "CNOT" else 1
        if len(self.wires) != arity:
            raise UsageError(f"{self.kind} acts on {arity} wire(s), got {self.wires}")
        if self.kind in ("RX", "RY", "RZ") and self.angle is None:
            raise UsageError(f"{self.kind} needs an angle")

    @property
    def matrix(self) -> np.ndarray:
        return gate_matrix(self.kind, self.angle)


def rx(theta):
    c, s = np.cos(np.asarray(theta) / 2), np.sin(np.asarray(theta) / 2)
    return _stack([[c, -1j * s], [-1j * s, c]])


def ry(theta):
    c, s = np.cos(np.asarray(theta) / 2), np.sin(np.asarray(theta) / 2)
    return _stack([[c, -s], [s, c]])


def rz(theta):
    e = np.exp(-0.5j * np.asarray(theta))
    zero = np.zeros_like(e)
    return _stack([[e, zero], [zero, e.conj()]])


def _stack(rows) -> np.ndarray:
    # works for scalar angles (2, 2) and angle vectors (B, 2, 2)
    m = np.array(rows, dtype=complex)
    return np.moveaxis(m, (0, 1), (-2, -1)) if m.ndim > 2 else m


_ROTATIONS = {"RX": rx, "RY": ry, "RZ": rz}


def gate_matrix(kind: str, angle=None) -> np.ndarray:
    if kind == "H":
        return _H
    if kind == "CNOT":
        return _CNOT
    return _ROTATIONS[kind](angle)


def _check_wires(wires, n: int) -> None:
    if len(set(wires)) != len(wires):
        raise UsageError(f"wires must be distinct, got {wires}")
    for w in wires:
        if not 0 <= w < n:
            raise UsageError(f"wire {w} out of range for {n} qubit(s)")


def apply_qubit_gate(state: QubitState, gate: QubitGate) -> QubitState:
    n = state.n_qubits
    _check_wires(gate.wires, n)
    psi = state.amplitudes.reshape((1,) + (2,) * n)
    out = contract(psi, gate.matrix, gate.wires, 2)
    return QubitState(np.ascontiguousarray(out).reshape(-1), n)


def run(gates, n_qubits: int, initial: QubitState | None = None) -> QubitState:
    state = initial if initial is not None else QubitState.zero(n_qubits)
    for g in gates:
        state = apply_qubit_gate(state, g)
    return state


def angle_encode(features, n_qubits: int) -> list[QubitGate]:
    """RY(pi * x_i) on wire i; wires beyond the feature count are left alone."""
    features = [float(x) for x in features]
    if len(features) > n_qubits:
        raise DataError(f"{len(features)} features do not fit on {n_qubits} qubit(s)")
    for x in features:
        if not 0.0 <= x <= 1.0:
            raise DataError(f"angle encoding expects features in [0, 1], got {x}")
    return [QubitGate("RY", (i,), math.pi * x) for i, x in enumerate(features)]


def amplitude_vector(features, n_qubits: int) -> np.ndarray:
    vec = np.asarray(features, dtype=float)
    if vec.ndim != 1 or vec.size > 2**n_qubits:
        raise DataError(f"{vec.size} features do not fit in {2**n_qubits} amplitudes")
    norm = np.linalg.norm(vec)
    if norm == 0.0 or not np.isfinite(norm):
        raise DataError("amplitude encoding needs a nonzero finite feature vector")
    out = np.zeros(2**n_qubits, dtype=complex)
    out[: vec.size] = vec / norm
    return out


def amplitude_encode(features, n_qubits: int | None = None) -> QubitState:
    """L2-normalise ``features`` and zero-pad them into a statevector.

    With ``n_qubits`` omitted the smallest register that fits (at least 2
    qubits) is used.
    """
    size = len(features)
    if n_qubits is None:
        n_qubits = max(2, math.ceil(math.log2(max(size, 1))))
    return QubitState(amplitude_vector(features, n_qubits), n_qubits)


def z_expectation(state: QubitState, wire: int) -> float:
    _check_wires([wire], state.n_qubits)
    probs = np.abs(state.amplitudes.reshape((2,) * state.n_qubits)) ** 2
    probs = np.moveaxis(probs, wire, 0).reshape(2, -1)
    return float(probs[0].sum() - probs[1].sum())


def batch_z(psi: np.ndarray, wire: int) -> np.ndarray:
    """<Z_wire> for a batch tensor shaped ``(B, 2, ..., 2)``."""
    probs = np.abs(np.moveaxis(psi, wire + 1, 1)) ** 2
    probs = probs.reshape(psi.shape[0], 2, -1).sum(axis=2)
    return probs[:, 0] - probs[:, 1]

"""Truncated Fock-basis simulation of multi-qumode pure states.

Conventions: hbar = 2, so ``x = a + a^dagger`` and ``p = -i(a - a^dagger)``;
a coherent state |alpha> has <x> = 2 Re(alpha).

Non-diagonal single-mode gates are exponentiated at a padded dimension
``cutoff + pad`` and then truncated, which keeps the truncation error away
from the working block. Only the leading ``cutoff`` rows of the generator
eigenvectors enter the product, so large pads are cheap after the one-off
eigendecomposition. The beamsplitter conserves total photon number, so it is
built exactly block by block instead.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ._tensor import contract
from .errors import ConfigurationError, TruncationWarning, UsageError

PAD = 10
# Per-kind padding; squeezing and cubic phase converge far more slowly
# than displacement (checked against closed forms for |param| <= 1).
DEFAULT_PADS = {"displacement": PAD, "squeezing": 100, "cubic_phase": 1000}
NORM_TOL = 1e-6
DRIFT_WARN = 1e-3

GAUSSIAN_KINDS = ("displacement", "rotation", "squeezing", "beamsplitter")
NONGAUSSIAN_KINDS = ("kerr", "cross_kerr", "cubic_phase")
_ARITY = {
    "displacement": 1,
    "rotation": 1,
    "squeezing": 1,
    "beamsplitter": 2,
    "kerr": 1,
    "cross_kerr": 2,
    "cubic_phase": 1,
}
DIAGONAL_KINDS = ("rotation", "kerr", "cross_kerr")


@dataclass(frozen=True)
class FockState:
    """Pure state of ``modes`` qumodes, amplitudes shaped ``(cutoff,) * modes``."""

    amplitudes: np.ndarray
    modes: int
    cutoff: int

    def __post_init__(self):
        if self.modes < 1 or self.cutoff < 2:
            raise ConfigurationError(f"need modes >= 1 and cutoff >= 2, got {self.modes}, {self.cutoff}")
        if self.amplitudes.shape != (self.cutoff,) * self.modes:
            raise ConfigurationError(
                f"amplitude shape {self.amplitudes.shape} does not match {(self.cutoff,) * self.modes}"
            )
        self.amplitudes.flags.writeable = False

    @property
    def norm(self) -> float:
        return float(np.sum(np.abs(self.amplitudes) ** 2))

    @classmethod
    def from_amplitudes(cls, amplitudes, modes: int | None = None) -> "FockState":
        amps = np.array(amplitudes, dtype=complex)
        if modes is None:
            modes = amps.ndim
        cutoff = round(amps.size ** (1.0 / modes))
        return cls(amps.reshape((cutoff,) * modes), modes, cutoff)

    @classmethod
    def basis(cls, occupations, cutoff: int) -> "FockState":
        modes = len(occupations)
        amps = np.zeros((cutoff,) * modes, dtype=complex)
        amps[tuple(occupations)] = 1.0
        return cls(amps, modes, cutoff)


@dataclass(frozen=True)
class CVGateMatrix:
    entries: np.ndarray
    arity: int
    kind: str


@dataclass(frozen=True)
class LadderPair:
    annihilation: np.ndarray
    creation: np.ndarray


def ladder(cutoff: int) -> LadderPair:
    a = np.diag(np.sqrt(np.arange(1, cutoff, dtype=float)), k=1).astype(complex)
    return LadderPair(a, a.conj().T)


def vacuum_state(modes: int, cutoff: int) -> FockState:
    if modes < 1 or cutoff < 2:
        raise ConfigurationError(f"need modes >= 1 and cutoff >= 2, got {modes}, {cutoff}")
    amps = np.zeros((cutoff,) * modes, dtype=complex)
    amps[(0,) * modes] = 1.0
    return FockState(amps, modes, cutoff)


# --- generator eigensystems, computed once per padded dimension -------------


@lru_cache(maxsize=None)
def _displacement_eig(n: int):
    a = ladder(n).annihilation.real
    # i(a^dag - a) is Hermitian; exp(r(a^dag - a)) = V exp(-i r lam) V^dag
    return np.linalg.eigh(1j * (a.T - a))


@lru_cache(maxsize=None)
def _squeeze_eig(n: int):
    a = ladder(n).annihilation.real
    gen = 0.5 * (a @ a - a.T @ a.T)
    return np.linalg.eigh(1j * gen)


@lru_cache(maxsize=None)
def _quadrature_eig(n: int):
    a = ladder(n).annihilation.real
    return np.linalg.eigh(a + a.T)


@lru_cache(maxsize=None)
def _bs_block_eig(total: int):
    # basis |k, total-k>, k = 0..total; generator a^dag b - a b^dag
    g = np.zeros((total + 1, total + 1))
    for k in range(total):
        amp = math.sqrt((k + 1) * (total - k))
        g[k + 1, k] = amp
        g[k, k + 1] = -amp
    return np.linalg.eigh(1j * g)


def _expm_from_eig(eig, coeff: float, rows: int | None = None) -> np.ndarray:
    """Leading ``rows`` block of exp(-i * coeff * H) given H's eigensystem."""
    lam, vec = eig
    if rows is not None:
        vec = vec[:rows]
    return (vec * np.exp(-1j * coeff * lam)) @ vec.conj().T


def _displacement(alpha: complex, cutoff: int, pad: int) -> np.ndarray:
    r, phi = abs(alpha), np.angle(alpha)
    block = _expm_from_eig(_displacement_eig(cutoff + pad), r, cutoff)
    idx = np.arange(cutoff)
    # D(r e^{i phi}) = R(phi) D(r) R(-phi)
    return block * np.exp(1j * phi * (idx[:, None] - idx[None, :]))


def _squeezing(r: float, cutoff: int, pad: int) -> np.ndarray:
    return _expm_from_eig(_squeeze_eig(cutoff + pad), r, cutoff)


def _cubic_phase(gamma: float, cutoff: int, pad: int) -> np.ndarray:
    lam, vec = _quadrature_eig(cutoff + pad)
    vec = vec[:cutoff]
    return (vec * np.exp(1j * gamma * lam**3 / 3.0)) @ vec.conj().T


def _beamsplitter(theta: float, phi: float, cutoff: int) -> np.ndarray:
    d = cutoff
    out = np.zeros((d, d, d, d), dtype=complex)
    for total in range(2 * d - 1):
        block = _expm_from_eig(_bs_block_eig(total), theta)
        ks = np.arange(max(0, total - d + 1), min(total, d - 1) + 1)
        sub = block[np.ix_(ks, ks)]
        out[ks[:, None], total - ks[:, None], ks[None, :], total - ks[None, :]] = sub
    n1 = np.arange(d)
    phase = np.exp(1j * phi * (n1[:, None] - n1[None, :]))
    out *= phase[:, None, :, None]
    return out.reshape(d * d, d * d)


def _check_real(kind: str, value) -> float:
    if isinstance(value, (complex, np.complexfloating)):
        if value.imag != 0:
            raise ConfigurationError(f"{kind} expects a real parameter, got {value}")
        value = value.real
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise ConfigurationError(f"{kind} expects a real parameter, got {value!r}") from None
    if not math.isfinite(value):
        raise ConfigurationError(f"{kind} parameter must be finite, got {value}")
    return value


def _canonical_params(kind: str, params) -> tuple:
    if np.isscalar(params):
        params = [params]
    params = list(params)
    expected = 2 if kind == "beamsplitter" else 1
    if len(params) != expected:
        raise ConfigurationError(f"{kind} takes {expected} parameter(s), got {len(params)}")
    if kind == "displacement":
        try:
            alpha = complex(params[0])
        except (TypeError, ValueError):
            raise ConfigurationError(f"displacement expects a complex amplitude, got {params[0]!r}") from None
        if not (math.isfinite(alpha.real) and math.isfinite(alpha.imag)):
            raise ConfigurationError(f"displacement amplitude must be finite, got {alpha}")
        return (round(alpha.real, 12), round(alpha.imag, 12))
    return tuple(round(_check_real(kind, p), 12) for p in params)


@lru_cache(maxsize=8192)
def _cached_matrix(kind: str, key: tuple, cutoff: int, pad: int) -> np.ndarray:
    d = cutoff
    if kind == "displacement":
        m = _displacement(complex(*key), d, pad)
    elif kind == "rotation":
        m = np.diag(np.exp(1j * key[0] * np.arange(d)))
    elif kind == "squeezing":
        m = _squeezing(key[0], d, pad)
    elif kind == "beamsplitter":
        m = _beamsplitter(key[0], key[1], d)
    elif kind == "kerr":
        m = np.diag(np.exp(1j * key[0] * np.arange(d) ** 2))
    elif kind == "cross_kerr":
        n = np.arange(d)
        m = np.diag(np.exp(1j * key[0] * np.outer(n, n)).ravel())
    elif kind == "cubic_phase":
        m = _cubic_phase(key[0], d, pad)
    else:
        raise ConfigurationError(f"unknown CV gate kind {kind!r}")
    m.flags.writeable = False
    return m


def _gate(kind: str, params, cutoff: int, pad: int | None) -> CVGateMatrix:
    if cutoff < 2:
        raise ConfigurationError(f"cutoff must be >= 2, got {cutoff}")
    if pad is None:
        pad = DEFAULT_PADS.get(kind, 0)
    key = _canonical_params(kind, params)
    return CVGateMatrix(_cached_matrix(kind, key, cutoff, pad), _ARITY[kind], kind)


def gaussian_gate_matrix(kind: str, params, cutoff: int, pad: int | None = None) -> CVGateMatrix:
    """Truncated Gaussian gate.

    ``displacement`` takes a complex alpha, ``rotation`` a phase, ``squeezing``
    a real r and ``beamsplitter`` the pair (theta, phi); theta = pi/4 is 50:50.
    """
    if kind not in GAUSSIAN_KINDS:
        raise ConfigurationError(f"{kind!r} is not a Gaussian gate kind")
    return _gate(kind, params, cutoff, pad)


def nongaussian_gate_matrix(kind: str, param, cutoff: int, pad: int | None = None) -> CVGateMatrix:
    if kind not in NONGAUSSIAN_KINDS:
        raise ConfigurationError(f"{kind!r} is not a non-Gaussian gate kind")
    return _gate(kind, param, cutoff, pad)


def gate_matrix(kind: str, params, cutoff: int, pad: int | None = None) -> CVGateMatrix:
    if kind not in _ARITY:
        raise ConfigurationError(f"unknown CV gate kind {kind!r}")
    return _gate(kind, params, cutoff, pad)


def check_drift(norm, where: str = "") -> None:
    drift = float(np.max(np.abs(np.asarray(norm) - 1.0)))
    if drift > DRIFT_WARN:
        warnings.warn(TruncationWarning(drift), stacklevel=3)


def _check_wires(wires, modes: int, arity: int | None = None) -> tuple:
    wires = tuple(int(w) for w in wires)
    if arity is not None and len(wires) != arity:
        raise UsageError(f"gate of arity {arity} applied to {len(wires)} wire(s)")
    if len(set(wires)) != len(wires):
        raise UsageError(f"wires must be distinct, got {wires}")
    for w in wires:
        if not 0 <= w < modes:
            raise UsageError(f"wire {w} out of range for {modes} mode(s)")
    return wires


def apply_gate(state: FockState, gate: CVGateMatrix, wires) -> FockState:
    wires = _check_wires(wires, state.modes, gate.arity)
    if gate.entries.shape[0] != state.cutoff**gate.arity:
        raise UsageError(f"gate built for a different cutoff than the state ({state.cutoff})")
    out = contract(state.amplitudes[None], gate.entries, wires, state.cutoff)[0]
    new = FockState(np.ascontiguousarray(out), state.modes, state.cutoff)
    check_drift(new.norm)
    return new


@lru_cache(maxsize=None)
def _x_matrix(cutoff: int) -> np.ndarray:
    a = ladder(cutoff).annihilation
    return a + a.conj().T


def quadrature_expectation(state: FockState, wire: int) -> float:
    """<psi| x_wire |psi> with x = a + a^dagger (no renormalization)."""
    (wire,) = _check_wires([wire], state.modes)
    psi = np.moveaxis(state.amplitudes, wire, 0).reshape(state.cutoff, -1)
    raw = np.vdot(psi, _x_matrix(state.cutoff) @ psi)
    if abs(raw.imag) > 1e-10:
        raise ArithmeticError(f"quadrature expectation not real: {raw}")
    return float(raw.real)


def batch_quadrature(psi: np.ndarray, wire: int, cutoff: int) -> np.ndarray:
    """Vectorised <x> for a batch tensor shaped ``(B, cutoff, ..., cutoff)``."""
    moved = np.moveaxis(psi, wire + 1, 1).reshape(psi.shape[0], cutoff, -1)
    sq = np.sqrt(np.arange(1, cutoff))
    a_expect = np.einsum("bnr,n,bnr->b", moved[:, :-1].conj(), sq, moved[:, 1:])
    return 2.0 * a_expect.real

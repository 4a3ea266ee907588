import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qforecast import qubit_sim as qs
from qforecast.errors import DataError, UsageError


def _apply(state, *gates):
    for g in gates:
        state = qs.apply_qubit_gate(state, g)
    return state


def test_ry_pi_flips_zero():
    out = _apply(qs.QubitState.zero(1), qs.QubitGate("RY", (0,), math.pi))
    np.testing.assert_allclose(np.abs(out.amplitudes), [0, 1], atol=1e-15)
    assert qs.z_expectation(out, 0) == pytest.approx(-1.0)


def test_bell_state():
    out = _apply(qs.QubitState.zero(2), qs.QubitGate("H", (0,)), qs.QubitGate("CNOT", (0, 1)))
    np.testing.assert_allclose(out.amplitudes, np.array([1, 0, 0, 1]) / math.sqrt(2), atol=1e-15)
    assert qs.z_expectation(out, 0) == pytest.approx(0.0, abs=1e-15)


def test_rz_leaves_z_unchanged():
    out = _apply(qs.QubitState.zero(1), qs.QubitGate("RZ", (0,), 1.234))
    assert abs(abs(out.amplitudes[0]) - 1) < 1e-15
    assert qs.z_expectation(out, 0) == pytest.approx(1.0)


def test_big_endian_ordering():
    out = _apply(qs.QubitState.zero(3), qs.QubitGate("RX", (0,), math.pi))
    assert abs(out.amplitudes[0b100]) == pytest.approx(1.0)
    out = _apply(qs.QubitState.zero(3), qs.QubitGate("RX", (2,), math.pi))
    assert abs(out.amplitudes[0b001]) == pytest.approx(1.0)


def test_cnot_reversed_wires():
    # control on wire 1, target wire 0: |01> -> |11>
    state = qs.QubitState(np.array([0, 1, 0, 0], dtype=complex), 2)
    out = qs.apply_qubit_gate(state, qs.QubitGate("CNOT", (1, 0)))
    np.testing.assert_allclose(out.amplitudes, [0, 0, 0, 1])


def test_half_angle_matrices():
    t = 0.37
    np.testing.assert_allclose(qs.ry(t), [[math.cos(t / 2), -math.sin(t / 2)], [math.sin(t / 2), math.cos(t / 2)]])
    np.testing.assert_allclose(qs.rx(t), [[math.cos(t / 2), -1j * math.sin(t / 2)], [-1j * math.sin(t / 2), math.cos(t / 2)]])
    np.testing.assert_allclose(qs.rz(t), np.diag([np.exp(-0.5j * t), np.exp(0.5j * t)]))
    stacked = qs.ry(np.array([t, 2 * t]))
    assert stacked.shape == (2, 2, 2)
    np.testing.assert_allclose(stacked[1], qs.ry(2 * t))


def test_z_expectation_basis():
    assert qs.z_expectation(qs.QubitState.zero(1), 0) == 1.0
    one = qs.QubitState(np.array([0, 1], dtype=complex), 1)
    assert qs.z_expectation(one, 0) == -1.0
    with pytest.raises(UsageError):
        qs.z_expectation(one, 1)


def test_gate_errors():
    with pytest.raises(UsageError):
        qs.apply_qubit_gate(qs.QubitState.zero(2), qs.QubitGate("H", (2,)))
    with pytest.raises(UsageError):
        qs.apply_qubit_gate(qs.QubitState.zero(2), qs.QubitGate("CNOT", (1, 1)))
    with pytest.raises(UsageError):
        qs.QubitGate("RY", (0,))
    with pytest.raises(UsageError):
        qs.QubitGate("SWAP", (0, 1))
    with pytest.raises(UsageError):
        qs.QubitState.zero(5)


def test_angle_encode_examples():
    (g,) = qs.angle_encode([0.0], 2)
    assert (g.kind, g.wires, g.angle) == ("RY", (0,), 0.0)
    out = qs.run(qs.angle_encode([1.0], 2), 2)
    assert abs(out.amplitudes[0b10]) == pytest.approx(1.0)
    g0, g1 = qs.angle_encode([0.5, 0.25], 2)
    assert g0.angle == pytest.approx(math.pi / 2) and g0.wires == (0,)
    assert g1.angle == pytest.approx(math.pi / 4) and g1.wires == (1,)
    with pytest.raises(DataError):
        qs.angle_encode([1.2], 2)
    with pytest.raises(DataError):
        qs.angle_encode([0.1, 0.2, 0.3], 2)


def test_amplitude_encode_examples():
    np.testing.assert_array_equal(qs.amplitude_encode([1, 0, 0, 0]).amplitudes, [1, 0, 0, 0])
    np.testing.assert_allclose(qs.amplitude_encode([3, 4], 2).amplitudes, [0.6, 0.8, 0, 0])
    with pytest.raises(DataError):
        qs.amplitude_encode([0, 0])


def test_amplitude_roundtrip_exact():
    v = np.array([0.5, 0.5, 0.5, 0.5])
    np.testing.assert_array_equal(qs.amplitude_encode(v, 2).amplitudes, v)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.tuples(st.sampled_from(["H", "RX", "RY", "RZ", "CNOT"]), st.integers(0, 3), st.integers(0, 3),
                          st.floats(-10, 10)), min_size=1, max_size=100))
def test_norm_preserved_over_long_sequences(ops):
    gates = []
    for kind, a, b, angle in ops:
        if kind == "CNOT":
            if a == b:
                continue
            gates.append(qs.QubitGate(kind, (a, b)))
        else:
            gates.append(qs.QubitGate(kind, (a,), angle if kind != "H" else None))
    out = qs.run(gates, 4)
    assert abs(out.norm - 1) < 1e-12


@settings(max_examples=30, deadline=None)
@given(st.floats(-10, 10), st.sampled_from(["RX", "RY", "RZ"]))
def test_rotation_inverse_and_cnot_involution(theta, kind):
    start = qs.run([qs.QubitGate("H", (0,)), qs.QubitGate("RY", (1,), 0.3)], 2)
    out = _apply(start, qs.QubitGate(kind, (0,), theta), qs.QubitGate(kind, (0,), -theta))
    np.testing.assert_allclose(out.amplitudes, start.amplitudes, atol=1e-12)
    out = _apply(start, qs.QubitGate("CNOT", (0, 1)), qs.QubitGate("CNOT", (0, 1)))
    np.testing.assert_allclose(out.amplitudes, start.amplitudes, atol=1e-15)


def test_batch_z_matches_single():
    s = qs.run([qs.QubitGate("RY", (0,), 0.7), qs.QubitGate("CNOT", (0, 1))], 2)
    psi = s.amplitudes.reshape(1, 2, 2)
    assert qs.batch_z(psi, 0)[0] == pytest.approx(qs.z_expectation(s, 0), abs=1e-15)
    assert qs.batch_z(psi, 1)[0] == pytest.approx(qs.z_expectation(s, 1), abs=1e-15)

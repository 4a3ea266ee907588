import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qforecast import fock_sim as fs
from qforecast.errors import ConfigurationError, TruncationWarning, UsageError

import oracles

# Frozen oracle values (computed once from tests/oracles.py).
D_03_00 = 0.9559974818331  # exp(-0.045)
D_0302_31 = 0.05489681326114464 + 0.1317523518267472j
D_0302_14 = 0.006662216048382124 + 0.03405132646950861j
S_05_00 = 0.9417106158316757  # cosh(0.5) ** -0.5
S_05_42 = -0.5525473640658377
V_01_20 = -0.03149631984247424
V_01_30 = 0.06578690500252408j
COHERENT_05_0 = 0.8824969025845953  # exp(-0.125)


def test_vacuum_examples():
    np.testing.assert_array_equal(fs.vacuum_state(1, 4).amplitudes, [1, 0, 0, 0])
    v = fs.vacuum_state(2, 3)
    assert v.amplitudes.shape == (3, 3)
    assert v.amplitudes[0, 0] == 1 and np.count_nonzero(v.amplitudes) == 1
    assert v.norm == 1.0
    with pytest.raises(ConfigurationError):
        fs.vacuum_state(0, 4)
    with pytest.raises(ConfigurationError):
        fs.vacuum_state(1, 1)


def test_state_is_immutable():
    v = fs.vacuum_state(1, 4)
    with pytest.raises(ValueError):
        v.amplitudes[0] = 2


def test_ladder_commutator_away_from_boundary():
    lp = fs.ladder(12)
    comm = lp.annihilation @ lp.creation - lp.creation @ lp.annihilation
    np.testing.assert_allclose(comm[:-1, :-1], np.eye(11), atol=1e-14)
    assert lp.annihilation[2, 3] == pytest.approx(math.sqrt(3))


def test_displacement_examples():
    np.testing.assert_allclose(fs.gaussian_gate_matrix("displacement", [0], 4).entries, np.eye(4), atol=1e-15)
    d = fs.gaussian_gate_matrix("displacement", [0.3], 12).entries
    assert d[0, 0] == pytest.approx(D_03_00, abs=1e-12)
    c = fs.gaussian_gate_matrix("displacement", [0.3 + 0.2j], 12).entries
    assert c[3, 1] == pytest.approx(D_0302_31, abs=1e-10)
    assert c[1, 4] == pytest.approx(D_0302_14, abs=1e-10)


def test_squeezing_examples():
    s = fs.gaussian_gate_matrix("squeezing", [0.5], 12).entries
    assert s[0, 0] == pytest.approx(S_05_00, abs=1e-10)
    assert s[4, 2] == pytest.approx(S_05_42, abs=1e-10)
    # odd-parity elements vanish
    assert abs(s[3, 0]) < 1e-12


def test_rotation_and_beamsplitter_examples():
    np.testing.assert_allclose(fs.gaussian_gate_matrix("rotation", [math.pi], 3).entries, np.diag([1, -1, 1]), atol=1e-15)
    np.testing.assert_allclose(fs.gaussian_gate_matrix("beamsplitter", [0, 0], 3).entries, np.eye(9), atol=1e-15)


def test_nongaussian_examples():
    np.testing.assert_array_equal(fs.nongaussian_gate_matrix("kerr", 0.0, 5).entries, np.eye(5))
    k = fs.nongaussian_gate_matrix("kerr", 0.1, 4).entries
    assert k[3, 3] == pytest.approx(np.exp(0.9j), abs=1e-15)
    ck = fs.nongaussian_gate_matrix("cross_kerr", 0.2, 3).entries
    assert ck[2 * 3 + 2, 2 * 3 + 2] == pytest.approx(np.exp(0.8j), abs=1e-15)
    np.testing.assert_allclose(fs.nongaussian_gate_matrix("cubic_phase", 0.0, 6).entries, np.eye(6), atol=1e-14)
    v = fs.nongaussian_gate_matrix("cubic_phase", 0.1, 12).entries
    assert v[2, 0] == pytest.approx(V_01_20, abs=1e-8)
    assert v[3, 0] == pytest.approx(V_01_30, abs=1e-8)


@pytest.mark.parametrize("alpha", [0.3, -0.7, 0.5 + 0.5j, 1.0j])
def test_displacement_matches_laguerre_oracle(alpha):
    d = fs.gaussian_gate_matrix("displacement", [alpha], 12).entries
    ref = np.array([[oracles.displacement_element(m, n, alpha) for n in range(7)] for m in range(7)])
    np.testing.assert_allclose(d[:7, :7], ref, atol=1e-8)


@pytest.mark.parametrize("r", [0.1, -0.3, 0.5, 1.0])
def test_squeezing_matches_sum_oracle(r):
    s = fs.gaussian_gate_matrix("squeezing", [r], 12).entries
    ref = np.array([[oracles.squeezing_element(m, n, r) for n in range(7)] for m in range(7)])
    np.testing.assert_allclose(s[:7, :7], ref, atol=1e-8)


def test_cubic_phase_matches_position_quadrature():
    v = fs.nongaussian_gate_matrix("cubic_phase", 0.15, 12).entries
    for m in range(4):
        for n in range(4):
            assert v[m, n] == pytest.approx(oracles.cubic_phase_element(m, n, 0.15), abs=1e-6)


def test_beamsplitter_matches_expm_on_number_blocks():
    for theta, phi in [(math.pi / 4, 0.0), (0.3, 0.7), (-0.2, 1.9)]:
        b = fs.gaussian_gate_matrix("beamsplitter", [theta, phi], 6).entries
        ref = oracles.beamsplitter_bruteforce(theta, phi, 6)
        for n1 in range(6):
            for n2 in range(6 - n1):
                for m1 in range(n1 + n2 + 1):
                    m2 = n1 + n2 - m1
                    if m2 < 6:
                        assert b[m1 * 6 + m2, n1 * 6 + n2] == pytest.approx(ref[m1 * 6 + m2, n1 * 6 + n2], abs=1e-10)


@pytest.mark.parametrize("cutoff", [3, 4, 6, 12])
def test_hom_null(cutoff):
    b = fs.gaussian_gate_matrix("beamsplitter", [math.pi / 4, 0.0], cutoff)
    out = fs.apply_gate(fs.FockState.basis((1, 1), cutoff), b, [0, 1]).amplitudes
    assert abs(out[1, 1]) < 1e-10
    assert abs(out[2, 0]) == pytest.approx(1 / math.sqrt(2), abs=1e-12)
    assert abs(out[0, 2]) == pytest.approx(1 / math.sqrt(2), abs=1e-12)


@pytest.mark.parametrize("kind,param", [("rotation", 0.9), ("kerr", -0.7), ("cross_kerr", 1.0)])
def test_diagonal_gates_exactly_unitary(kind, param):
    g = fs.gate_matrix(kind, [param], 12).entries
    assert np.count_nonzero(g - np.diag(np.diag(g))) == 0
    np.testing.assert_allclose(np.abs(np.diag(g)), 1.0, atol=1e-15)


def _low_block(u: np.ndarray, arity: int, cutoff: int, limit: int) -> np.ndarray:
    idx = [i for i in range(cutoff**arity) if sum(np.unravel_index(i, (cutoff,) * arity)) <= limit]
    return u[np.ix_(idx, idx)], idx


@pytest.mark.parametrize("kind,param,element", [
    ("displacement", 0.6, oracles.displacement_element),
    ("squeezing", 0.4, oracles.squeezing_element),
])
def test_column_norm_deficit_equals_weight_beyond_cutoff(kind, param, element):
    # non-diagonal gates are unitary only up to the amplitude that physically
    # leaves the truncated space; that leakage is predicted by the oracle
    g = fs.gate_matrix(kind, [param], 12).entries
    for n in range(7):
        outside = sum(abs(element(m, n, param)) ** 2 for m in range(12, 80))
        assert 1 - np.linalg.norm(g[:, n]) ** 2 == pytest.approx(outside, abs=1e-9)


def test_low_block_unitarity_at_large_cutoff():
    # the same gates built at a generous cutoff are unitary on the <= 6 block
    for kind, params in [("displacement", [1.0]), ("squeezing", [0.5]), ("cubic_phase", [0.05])]:
        g = fs.gate_matrix(kind, params, 60).entries
        cols = g[:, :7]
        np.testing.assert_allclose(cols.conj().T @ cols, np.eye(7), atol=1e-6)


def test_beamsplitter_block_exactly_unitary():
    g = fs.gate_matrix("beamsplitter", [1.0, 0.3], 12).entries
    block, _ = _low_block(g, 2, 12, 11)
    np.testing.assert_allclose(block.conj().T @ block, np.eye(block.shape[0]), atol=1e-12)


def test_quadrature_examples():
    assert fs.quadrature_expectation(fs.vacuum_state(1, 12), 0) == 0.0
    s = fs.apply_gate(fs.vacuum_state(1, 12), fs.gaussian_gate_matrix("displacement", [0.5], 12), [0])
    assert s.amplitudes[0] == pytest.approx(COHERENT_05_0, abs=1e-12)
    np.testing.assert_allclose(s.amplitudes, oracles.coherent_amplitudes(0.5, 12), atol=1e-10)
    assert fs.quadrature_expectation(s, 0) == pytest.approx(1.0, abs=1e-6)
    rotated = fs.apply_gate(s, fs.gaussian_gate_matrix("rotation", [math.pi / 2], 12), [0])
    assert fs.quadrature_expectation(rotated, 0) == pytest.approx(0.0, abs=1e-6)


@pytest.mark.parametrize("alpha", [0.1, 0.25, 0.5, 0.9])
def test_coherent_quadrature_is_two_re_alpha(alpha):
    s = fs.apply_gate(fs.vacuum_state(1, 12), fs.gaussian_gate_matrix("displacement", [alpha], 12), [0])
    assert fs.quadrature_expectation(s, 0) == pytest.approx(2 * alpha, abs=1e-6)


def test_apply_identity_and_other_modes_untouched():
    rng = np.random.default_rng(3)
    amps = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    s = fs.FockState(amps / np.linalg.norm(amps), 2, 4)
    same = fs.apply_gate(s, fs.gate_matrix("rotation", [0.0], 4), [1])
    np.testing.assert_array_equal(same.amplitudes, s.amplitudes)
    r = fs.apply_gate(s, fs.gate_matrix("rotation", [0.4], 4), [1])
    np.testing.assert_allclose(r.amplitudes, s.amplitudes * np.exp(0.4j * np.arange(4))[None, :], atol=1e-15)


def test_apply_gate_errors():
    s = fs.vacuum_state(2, 4)
    with pytest.raises(UsageError):
        fs.apply_gate(s, fs.gate_matrix("rotation", [0.1], 4), [2])
    with pytest.raises(UsageError):
        fs.apply_gate(s, fs.gate_matrix("beamsplitter", [0.1, 0], 4), [0])
    with pytest.raises(UsageError):
        fs.apply_gate(s, fs.gate_matrix("beamsplitter", [0.1, 0], 4), [1, 1])
    with pytest.raises(UsageError):
        fs.quadrature_expectation(s, 5)


def test_parameter_errors():
    with pytest.raises(ConfigurationError):
        fs.gaussian_gate_matrix("beamsplitter", [0.1], 4)
    with pytest.raises(ConfigurationError):
        fs.gaussian_gate_matrix("kerr", [0.1], 4)
    with pytest.raises(ConfigurationError):
        fs.nongaussian_gate_matrix("kerr", math.nan, 4)
    with pytest.raises(ConfigurationError):
        fs.gate_matrix("teleport", [0.1], 4)


def test_truncation_warning_carries_drift():
    big = fs.gaussian_gate_matrix("displacement", [2.0], 6)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        out = fs.apply_gate(fs.vacuum_state(1, 6), big, [0])
    drift = 1 - out.norm
    assert drift > 1e-3
    ws = [w.message for w in caught if isinstance(w.message, TruncationWarning)]
    assert ws and ws[0].drift == pytest.approx(drift, rel=1e-9)
    assert out.norm < 1  # no silent renormalisation


def test_gate_cache_returns_read_only_shared_matrix():
    a = fs.gate_matrix("squeezing", [0.3], 8).entries
    b = fs.gate_matrix("squeezing", [0.3 + 1e-14], 8).entries
    assert a is b
    with pytest.raises(ValueError):
        a[0, 0] = 0


@settings(max_examples=25, deadline=None)
@given(st.floats(-1, 1), st.floats(-math.pi, math.pi))
def test_composition_with_inverse(x, phi):
    # small-amplitude start state so truncation leakage stays negligible
    s = fs.vacuum_state(2, 12)
    s = fs.apply_gate(s, fs.gate_matrix("displacement", [0.2], 12), [0])
    s = fs.apply_gate(s, fs.gate_matrix("displacement", [0.1j], 12), [1])
    for kind, fwd, inv, wires in [
        ("rotation", [phi], [-phi], [0]),
        ("kerr", [x], [-x], [1]),
        ("cross_kerr", [x], [-x], [0, 1]),
        ("beamsplitter", [x, phi], [-x, phi], [0, 1]),
    ]:
        there = fs.apply_gate(s, fs.gate_matrix(kind, fwd, 12), wires)
        back = fs.apply_gate(there, fs.gate_matrix(kind, inv, 12), wires)
        np.testing.assert_allclose(back.amplitudes, s.amplitudes, atol=1e-8)


@settings(max_examples=15, deadline=None)
@given(st.floats(-0.3, 0.3))
def test_composition_nondiagonal_small_parameters(x):
    s = fs.apply_gate(fs.vacuum_state(1, 12), fs.gate_matrix("displacement", [0.1], 12), [0])
    for kind in ("displacement", "squeezing"):
        there = fs.apply_gate(s, fs.gate_matrix(kind, [x * 0.1], 12), [0])
        back = fs.apply_gate(there, fs.gate_matrix(kind, [-x * 0.1], 12), [0])
        np.testing.assert_allclose(back.amplitudes, s.amplitudes, atol=1e-8)


@settings(max_examples=30, deadline=None)
@given(st.complex_numbers(max_magnitude=0.9), st.floats(-math.pi, math.pi))
def test_quadrature_always_real(alpha, phi):
    s = fs.apply_gate(fs.vacuum_state(1, 12), fs.gate_matrix("displacement", [alpha], 12), [0])
    s = fs.apply_gate(s, fs.gate_matrix("rotation", [phi], 12), [0])
    value = fs.quadrature_expectation(s, 0)  # raises if imag > 1e-10
    batch = fs.batch_quadrature(s.amplitudes[None], 0, 12)[0]
    assert batch == pytest.approx(value, abs=1e-12)

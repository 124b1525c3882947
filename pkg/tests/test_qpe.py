import math
import time

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qpelab import statevector as sv
from qpelab.qpe import (OutcomeDistribution, PhaseRegisterSpec, coalesce_bins, emulate_qpe, inverse_qft,
                        nearest_bins, period_success_curve, phase_success_probability, run_qpe,
                        success_probability)
from qpelab.windows import WindowSpec, make_window, window

BOUND = 8 / math.pi**2


def circuit_matrix(gates, n):
    cols = [sv.apply_gates(sv.new_basis_state(n, b), gates).amplitudes for b in range(2**n)]
    return np.array(cols).T


def dirichlet_probability(delta, N):
    """|sin(N pi d) / (N sin(pi d))|^2, probability of the bin at offset ``delta`` (in turns)."""
    return (math.sin(N * math.pi * delta) / (N * math.sin(math.pi * delta))) ** 2


def test_one_qubit_inverse_qft_is_hadamard():
    gates = inverse_qft(1)
    assert len(gates) == 1
    np.testing.assert_allclose(gates[0].matrix, sv.H_MATRIX, atol=1e-15)


def test_qft_round_trip():
    rng = np.random.default_rng(1)
    a = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    s = sv.StateVector(2, a / np.linalg.norm(a))
    inv = inverse_qft(2)
    out = sv.apply_gates(sv.apply_gates(s, sv.dagger(inv)), inv)
    np.testing.assert_allclose(out.amplitudes, s.amplitudes, atol=1e-10)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_inverse_qft_equals_conjugate_dft(n):
    N = 2**n
    j, k = np.meshgrid(np.arange(N), np.arange(N), indexing="ij")
    dft = np.exp(2j * np.pi * j * k / N) / math.sqrt(N)
    np.testing.assert_allclose(circuit_matrix(inverse_qft(n), n), dft.conj(), atol=1e-10)


def test_exact_phase_is_deterministic():
    d = run_qpe(3 / 8, PhaseRegisterSpec(3), WindowSpec("rectangular", 3))
    assert d.probs[3] == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("y0", [0, 5, 13])
def test_emulator_exact_bin(y0):
    d = emulate_qpe(y0 / 16, 4, window("rectangular", 4))
    assert d.probs[y0] == pytest.approx(1.0, abs=1e-12)


def test_emulator_mid_bin_matches_dirichlet():
    n, y0 = 5, 7
    N = 2**n
    phi = (y0 + 0.5) / N
    d = emulate_qpe(phi, n, window("rectangular", n))
    for y in range(N):
        assert d.probs[y] == pytest.approx(dirichlet_probability(phi - y / N, N), abs=1e-14)


def test_mid_bin_success_near_bound():
    m = 5
    phi = 10.5 / 2**m
    s = success_probability(emulate_qpe(phi, m, window("rectangular", m)), phi, m)
    assert abs(s - BOUND) <= 0.01


def test_emulator_speed_at_fourteen_bits():
    w = window("kaiser", 14, 3.0)
    t = time.perf_counter()
    d = emulate_qpe(0.123456, 14, w)
    coalesce_bins(d, 3)
    assert time.perf_counter() - t < 1.0


def test_coalescing():
    u = OutcomeDistribution(4, np.full(16, 1 / 16))
    assert coalesce_bins(u, 0).probs.tolist() == u.probs.tolist()
    np.testing.assert_allclose(coalesce_bins(u, 2).probs, np.full(4, 0.25))
    delta = np.zeros(16)
    delta[11] = 1
    assert coalesce_bins(OutcomeDistribution(4, delta), 2).probs[11 // 4] == 1


def test_success_definitions():
    m = 3
    delta = np.zeros(8)
    delta[5] = 1
    assert success_probability(OutcomeDistribution(m, delta), 5.2 / 8, m) == 1
    assert success_probability(OutcomeDistribution(m, np.full(8, 1 / 8)), 0.3, m) == pytest.approx(2 / 8)
    assert nearest_bins(0.99, 3) == (7, 0)


def test_phase_success_reduces_to_two_bins_without_extra_qubits():
    rng = np.random.default_rng(5)
    for phi in rng.random(20):
        d = emulate_qpe(phi, 4, window("cosine", 4))
        assert phase_success_probability(d, phi, 4) == pytest.approx(success_probability(d, phi, 4), abs=1e-15)


def test_phase_success_window_has_full_width():
    # with p extra qubits the accepted readouts span 2^(p+1) fine bins
    d = OutcomeDistribution(5, np.full(32, 1 / 32))
    assert phase_success_probability(d, 0.1, 3) == pytest.approx(8 / 32)


def test_rejects_bad_inputs():
    with pytest.raises(ValueError):
        run_qpe(1.5, PhaseRegisterSpec(3), WindowSpec("rectangular", 3))
    with pytest.raises(ValueError):
        run_qpe(0.2, PhaseRegisterSpec(3), WindowSpec("rectangular", 4))
    with pytest.raises(ValueError):
        OutcomeDistribution(2, [0.5, 0.5, 0.5, 0.5])


@pytest.mark.parametrize("n", [1, 3, 5])
def test_cosine_circuit_preparation_matches_injection(n):
    reg = PhaseRegisterSpec(n)
    a = run_qpe(0.3172, reg, WindowSpec("cosine", n), prep="circuit")
    b = run_qpe(0.3172, reg, WindowSpec("cosine", n), prep="inject")
    np.testing.assert_allclose(a.probs, b.probs, atol=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.floats(0, 1, exclude_max=True), st.integers(1, 7),
       st.sampled_from(["rectangular", "cosine", "sine", "kaiser"]), st.floats(0, 60))
def test_circuit_matches_emulator(phi, n, kind, alpha):
    spec = WindowSpec(kind, n, alpha if kind == "kaiser" else 0.0)
    circ = run_qpe(phi, PhaseRegisterSpec(n), spec)
    emu = emulate_qpe(phi, n, make_window(spec))
    np.testing.assert_allclose(circ.probs, emu.probs, atol=1e-10)


@settings(max_examples=30, deadline=None)
@given(st.floats(0, 1, exclude_max=True), st.integers(2, 6), st.integers(0, 3))
def test_success_is_periodic(phi, m, p):
    n = m + p
    w = window("kaiser", n, 4.0)
    shifted = (phi + 1 / 2**n) % 1.0
    a = phase_success_probability(emulate_qpe(phi, n, w), phi, m)
    b = phase_success_probability(emulate_qpe(shifted, n, w), shifted, m)
    assert abs(a - b) < 1e-10


def test_rectangular_dense_grid_bound():
    _, succ = period_success_curve(window("rectangular", 5), 5, 4000)
    assert succ.min() >= BOUND - 1e-3

import math
import warnings

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qpelab import statevector as sv
from qpelab.windows import (KAISER_ALPHA_TABLE, WindowSpec, bessel_i0, best_alpha, cosine_window_circuit,
                            log_bessel_i0, make_window, native_labels, rectangular_window_circuit,
                            spectrum_metrics, window)


def series_i0(x, terms=60):
    """Power series sum (x/2)^(2k) / (k!)^2 in extended precision."""
    mpmath.mp.dps = 40
    x = mpmath.mpf(x)
    return float(sum((x / 2) ** (2 * k) / mpmath.factorial(k) ** 2 for k in range(terms)))


def test_rectangular_two_qubits():
    np.testing.assert_allclose(window("rectangular", 2).amplitudes, [0.5] * 4, atol=1e-15)


def test_cosine_two_qubits_from_closed_form():
    w = window("cosine", 2)
    x = w.labels
    ref = np.cos(np.pi * x / 4)
    ref /= np.linalg.norm(ref)
    np.testing.assert_allclose(w.amplitudes, ref, atol=1e-15)
    # signed labels in native basis order, lower half first
    np.testing.assert_array_equal(x, [0, 1, -2, -1])


def test_sine_window_closed_form():
    w = window("sine", 3)
    x = np.arange(8)
    ref = np.sin(np.pi * (x + 1) / 9)
    np.testing.assert_allclose(w.amplitudes, ref / np.linalg.norm(ref), atol=1e-15)


@pytest.mark.parametrize("n", [1, 3, 6])
def test_small_alpha_kaiser_is_rectangular(n):
    dev = np.max(np.abs(window("kaiser", n, 1e-5).amplitudes - window("rectangular", n).amplitudes))
    assert dev < 1e-4


def test_kaiser_matches_direct_bessel_ratio():
    n, alpha = 4, 3.0
    N = 2**n
    x = native_labels(n, signed=True)
    raw = np.array([series_i0(math.pi * alpha * math.sqrt(1 - (2 * xi / N) ** 2)) for xi in x])
    np.testing.assert_allclose(window("kaiser", n, alpha).amplitudes, raw / np.linalg.norm(raw), rtol=1e-12)


def test_kaiser_large_alpha_is_finite():
    w = window("kaiser", 4, 200.0).amplitudes
    assert np.all(np.isfinite(w)) and abs(np.linalg.norm(w) - 1) < 1e-12


def test_bessel_values():
    assert bessel_i0(0.0) == 1.0
    assert bessel_i0(1.0) == pytest.approx(series_i0(1.0), rel=1e-12)
    assert math.isfinite(bessel_i0(500.0)) and bessel_i0(500.0) > bessel_i0(499.0)
    assert bessel_i0(500.0) == pytest.approx(float(mpmath.besseli(0, 500)), rel=1e-12)


@pytest.mark.parametrize("x", [0.3, 7.5, 14.9, 15.1, 40.0, 120.0])
def test_bessel_against_series(x):
    assert bessel_i0(x) == pytest.approx(series_i0(x, terms=200), rel=1e-12)


def test_bessel_overflow_and_domain():
    assert bessel_i0(713.0) == pytest.approx(float(mpmath.besseli(0, 713)), rel=1e-12)
    with pytest.raises(OverflowError):
        bessel_i0(720.0)
    with pytest.raises(ValueError):
        bessel_i0(-1.0)
    assert log_bessel_i0(2000.0) == pytest.approx(float(mpmath.log(mpmath.besseli(0, 2000))), rel=1e-13)


def test_rectangular_side_lobe_reference():
    assert spectrum_metrics(window("rectangular", 4), 16).max_side_lobe_db == pytest.approx(-13.3, abs=0.3)


def test_kaiser_side_lobes_drop_with_alpha():
    low = spectrum_metrics(window("kaiser", 4, 1e-5))
    for a in (25.0, 200.0):
        assert spectrum_metrics(window("kaiser", 4, a)).max_side_lobe_db < low.max_side_lobe_db


def test_spectrum_trade_off_is_monotone():
    alphas = [1e-5, 0.5, 1, 2, 3, 4, 6, 25, 200]
    ms = [spectrum_metrics(window("kaiser", 4, a)) for a in alphas]
    widths = [s.main_lobe_width_bins for s in ms]
    lobes = [s.max_side_lobe_db for s in ms]
    assert all(b >= a for a, b in zip(widths, widths[1:]))
    assert all(b <= a for a, b in zip(lobes, lobes[1:]))
    # strict while side lobes still exist
    assert all(b < a for a, b in zip(lobes[:7], lobes[1:7]))


def test_alpha_table():
    assert best_alpha(0) == 0
    assert best_alpha(3) == 25
    assert best_alpha(4) == 51
    with pytest.warns(UserWarning):
        best_alpha(5)
    with pytest.raises(ValueError, match="manually"):
        best_alpha(7)
    assert set(KAISER_ALPHA_TABLE) == set(range(7))


def test_spec_validation():
    with pytest.raises(ValueError):
        WindowSpec("cosine", 3, alpha=2.0)
    with pytest.raises(ValueError):
        WindowSpec("kaiser", 0, 1.0)
    with pytest.raises(ValueError):
        WindowSpec("hann", 3)


def circuit_register_state(n):
    state = sv.apply_gates(sv.new_basis_state(n + 1, 0), cosine_window_circuit(n))
    amps = state.amplitudes.reshape(2**n, 2)
    assert np.max(np.abs(amps[:, 1])) < 1e-12  # ancilla returned to |0>
    return amps[:, 0], state


@pytest.mark.parametrize("n", [1, 2, 3, 5])
def test_cosine_circuit_matches_amplitudes(n):
    amps, state = circuit_register_state(n)
    np.testing.assert_allclose(amps, window("cosine", n).amplitudes, atol=1e-10)
    assert abs(state.norm - 1) < 1e-12


def test_rectangular_circuit():
    state = sv.apply_gates(sv.new_basis_state(3, 0), rectangular_window_circuit(3))
    np.testing.assert_allclose(state.amplitudes, window("rectangular", 3).amplitudes, atol=1e-15)


kinds = st.sampled_from(["rectangular", "cosine", "sine", "kaiser"])


@settings(max_examples=60, deadline=None)
@given(kinds, st.integers(1, 10), st.floats(0, 200))
def test_unit_norm(kind, n, alpha):
    w = window(kind, n, alpha if kind == "kaiser" else 0.0)
    assert abs(np.linalg.norm(w.amplitudes) - 1) < 1e-12


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(["cosine", "kaiser"]), st.integers(2, 10), st.floats(1e-6, 200))
def test_signed_windows_are_symmetric_and_tapered(kind, n, alpha):
    w = window(kind, n, alpha if kind == "kaiser" else 0.0)
    x, a = w.ordered()
    # x runs over [-N/2, N/2); drop the unpaired -N/2 end and compare mirrored halves
    np.testing.assert_allclose(a[1:], a[1:][::-1], atol=1e-12)
    if kind == "kaiser":
        mag = a[np.argsort(np.abs(x), kind="stable")]
        assert np.all(np.diff(mag) <= 1e-15)

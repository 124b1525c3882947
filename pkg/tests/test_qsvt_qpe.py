import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qpelab.qpe import success_probability
from qpelab.qsp import PhaseFactors, qsp_amplitude, qsp_response
from qpelab.qsvt_qpe import (QsvtQpeConfig, QsvtStepContext, block_matrix, block_singular_value,
                             build_w_block, expected_singular_value, query_cost, qsvt_sequence,
                             rotated_out_turns, run_qsvt_batch, run_qsvt_qpe)

# zero phases give T_2(x) = 2x^2 - 1: exactly -1 at sigma=0 and +1 at sigma=1
T2 = PhaseFactors(np.zeros(3))


def test_step_layout():
    ctx = QsvtStepContext(0, 4)
    assert ctx.power == 8 and ctx.target_qubit == 3 and ctx.loaded_bits_register == []
    ctx = QsvtStepContext(2, 4)
    assert ctx.power == 2 and ctx.target_qubit == 1 and ctx.loaded_bits_register == [2, 3]
    assert rotated_out_turns(ctx) == [(2, 0.25), (3, 0.125)]
    with pytest.raises(ValueError):
        QsvtStepContext(4, 4)


@pytest.mark.parametrize("y, sigma", [(0b0110, 0.0), (0b0111, 1.0)])
def test_first_step_singular_value_reads_last_bit(y, sigma):
    # last bit 1 maps to singular value 1, the upper plateau of the shifted sign
    ctx = QsvtStepContext(0, 4)
    assert block_singular_value(ctx, y / 16) == pytest.approx(sigma, abs=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 6), st.data())
def test_block_singular_value_formula(m, data):
    k = data.draw(st.integers(0, m - 1))
    phi = data.draw(st.floats(0, 1, exclude_max=True))
    reg = data.draw(st.integers(0, 2**m - 1))
    ctx = QsvtStepContext(k, m)
    assert block_singular_value(ctx, phi, reg) == pytest.approx(expected_singular_value(ctx, phi, reg),
                                                                abs=1e-10)


def test_block_is_hermitian_reflection_sector():
    ctx = QsvtStepContext(1, 3)
    b = block_matrix(ctx, build_w_block(ctx, 0.3), 0b001)
    # the 2x2 block on the ancilla is unitary
    np.testing.assert_allclose(b @ b.conj().T, np.eye(2), atol=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-math.pi, math.pi), min_size=1, max_size=13).filter(lambda a: len(a) % 2 == 1),
       st.floats(0, 1, exclude_max=True))
def test_circuit_binds_to_qsp_convention(angles, phi):
    ctx = QsvtStepContext(0, 1)
    phases = PhaseFactors(angles)
    sigma = abs(math.sin(math.pi * phi))
    amp = block_matrix(ctx, qsvt_sequence(ctx, phases, phi))[0, 0]
    assert abs(amp - qsp_amplitude(phases, sigma)) < 1e-10
    assert abs(amp.real - qsp_response(phases, sigma)) < 1e-10


@pytest.mark.parametrize("m", [1, 3, 4])
def test_exact_phases_are_read_exactly_with_chebyshev_phases(m):
    phis = np.arange(2**m) / 2**m
    run = run_qsvt_batch(m, T2, phis)
    np.testing.assert_allclose(run.probs, np.eye(2**m), atol=1e-12)
    assert run.ancilla_excitation.max() < 1e-9


def test_single_step_sanity(phase_cache):
    fit = phase_cache(0.0577, 0.25, 16)
    dist = run_qsvt_qpe(QsvtQpeConfig(1, fit.phases, 0.0))
    assert dist.probs[0] >= 0.99


def test_distribution_is_valid_and_rejects_bad_config():
    rng = np.random.default_rng(2)
    run = run_qsvt_batch(3, PhaseFactors(rng.uniform(-1, 1, 7)), rng.random(20))
    assert run.probs.min() >= -1e-15
    np.testing.assert_allclose(run.probs.sum(axis=1), 1, atol=1e-9)
    with pytest.raises(ValueError):
        QsvtQpeConfig(3, PhaseFactors(np.zeros(4)), 0.1)
    with pytest.raises(ValueError):
        QsvtQpeConfig(3, T2, 1.5)


def test_success_wraps_around():
    dist = run_qsvt_qpe(QsvtQpeConfig(3, T2, 0.0))
    assert success_probability(dist, 0.99, 3) == pytest.approx(1.0)


@pytest.mark.parametrize("method, kw, cost", [
    ("qsvt", dict(m=5, d=64), 1984),
    ("windowed", dict(m=5, p=5), 1023),
    ("windowed", dict(m=5, p=4), 511),
    ("windowed", dict(m=1, p=0), 1),
])
def test_query_cost(method, kw, cost):
    m = kw.pop("m")
    assert query_cost(method, m, **kw) == cost


def test_query_cost_errors():
    with pytest.raises(ValueError):
        query_cost("qsvt", 5, d=63)
    with pytest.raises(ValueError):
        query_cost("other", 5)

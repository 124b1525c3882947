import math
import warnings

import numpy as np
import pytest

from qpelab import sweep
from qpelab.qsp import PhaseFactors
from qpelab.qsvt_qpe import query_cost
from qpelab.sweep import SweepConfig, run_sweep


def windowed(kind, p, m=5, alpha=None, **kw):
    if alpha is None:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            alpha = sweep.best_alpha(p) if kind == "kaiser" else 0.0
    return SweepConfig("windowed", m, kind, p, alpha, **kw)


@pytest.mark.parametrize("kind, p, target, tol", [
    ("rectangular", 5, -2.2, 0.3),
    ("cosine", 4, -5.07, 0.3),
    ("kaiser", 4, -7.28, 0.5),
])
def test_headline_failures(kind, p, target, tol):
    r = run_sweep(windowed(kind, p))
    assert abs(r.log10_max_failure - target) <= tol
    assert not r.precision_limited


def test_failure_tail_is_resolved_below_epsilon():
    r = run_sweep(windowed("kaiser", 6, n_points=200))
    assert 0 < r.max_failure < 1e-20 and r.precision_limited


def test_period_grid_matches_full_grid_statevector():
    cfg = windowed("cosine", 2, m=3, grid="full", n_points=64, engine="statevector")
    emu = run_sweep(windowed("cosine", 2, m=3, grid="full", n_points=64))
    np.testing.assert_allclose(run_sweep(cfg).failure, emu.failure, atol=1e-10)


def test_period_grid_repeats_across_full_grid():
    per = run_sweep(windowed("kaiser", 2, m=3, n_points=50))
    full = run_sweep(windowed("kaiser", 2, m=3, grid="full", n_points=50 * 32))
    np.testing.assert_allclose(full.failure.reshape(32, 50), np.tile(per.failure, (32, 1)), atol=1e-12)


def test_grid_convergence():
    for kind, p in (("rectangular", 0), ("cosine", 4), ("kaiser", 4)):
        a = run_sweep(windowed(kind, p, n_points=10_000)).min_success
        b = run_sweep(windowed(kind, p, n_points=20_000)).min_success
        assert abs(a - b) < 1e-4


def test_monotone_in_extra_qubits():
    for kind in ("cosine", "kaiser"):
        f = [run_sweep(windowed(kind, p, n_points=2000)).max_failure for p in range(1, 5)]
        assert all(b < a for a, b in zip(f, f[1:]))


@pytest.mark.parametrize("p", range(2, 7))
def test_kaiser_beats_cosine_with_tabulated_alpha(p):
    k = run_sweep(windowed("kaiser", p, n_points=2000)).max_failure
    c = run_sweep(windowed("cosine", p, n_points=2000)).max_failure
    assert k < c


def test_csv_is_deterministic():
    cfg = windowed("cosine", 2, n_points=300)
    a, b = sweep.sweep_csv(run_sweep(cfg)), sweep.sweep_csv(run_sweep(cfg))
    assert a == b
    lines = a.splitlines()
    assert lines[0] == "phi,success_probability,failure_probability,format_version"
    assert len(lines) == 301 and lines[1].endswith(",1")


def test_config_validation():
    with pytest.raises(ValueError):
        SweepConfig("qsvt", 3, phases=PhaseFactors(np.zeros(3)))
    with pytest.raises(ValueError):
        SweepConfig("qsvt", 3)
    with pytest.raises(ValueError):
        SweepConfig("windowed", 3, "cosine", alpha=2.0)
    with pytest.raises(ValueError):
        run_sweep(windowed("cosine", 6, m=12, engine="statevector"))


def test_cost_attached_to_config():
    assert windowed("kaiser", 4).cost() == 511
    assert SweepConfig("qsvt", 5, phases=PhaseFactors(np.zeros(65)), grid="full").cost() == 1984


def test_fit_recovers_synthetic_forms():
    p = np.arange(1, 7)
    f = 10.0 ** -(0.5 + 0.9 * p)
    fit = sweep.fit_scaling(p, f, "log_inv_delta")
    assert fit.params == pytest.approx((0.5, 0.9)) and fit.residual_norm < 1e-9
    g = 10.0 ** -np.exp(0.2 + 0.4 * p)
    fit = sweep.fit_scaling(p, g, "loglog_inv_delta")
    assert fit.params == pytest.approx((0.2, 0.4), abs=1e-8)
    with pytest.raises(ValueError):
        sweep.fit_scaling([1, 2], [0.1, 0.01], "log_inv_delta")


def test_fit_refused_with_few_usable_points():
    st = sweep.scaling_study("kaiser", 5, range(4, 7), n_points=500)
    assert st.fit is None and "refused" in st.note
    assert [pt.precision_limited for pt in st.points] == [False, True, True]


def test_popcount_report():
    m = 3
    f = np.array([bin(y).count("1") * 1e-3 for y in range(8)])
    rep = sweep.popcount_asymmetry(m, f)
    assert rep.spearman == pytest.approx(1.0)
    assert rep.rows()[0] == ("000", 0, 1.0)
    assert sweep.popcount_asymmetry(m, np.full(8, 1e-17)).spearman == 0.0
    with pytest.raises(ValueError):
        sweep.popcount_asymmetry(m, f[:4])


@pytest.fixture(scope="module")
def selections():
    return {k: sweep.select_window_resources(k, 5, n_points=2000) for k in ("rectangular", "cosine", "kaiser")}


@pytest.mark.parametrize("kind, p", [("rectangular", 5), ("cosine", 4), ("kaiser", 4)])
def test_minimum_resource_selection(selections, kind, p):
    assert selections[kind].parameter == p


def test_kaiser_needs_more_than_one_extra_qubit(selections):
    assert dict(selections["kaiser"].tried)[1] > 0.01


def test_selected_cost_ordering(selections):
    costs = {k: v.query_cost for k, v in selections.items()}
    assert costs["kaiser"] == costs["cosine"] < costs["rectangular"] < query_cost("qsvt", 5, d=64)


def test_qsvt_selection_walks_degrees():
    exact = PhaseFactors(np.zeros(3))
    noisy = PhaseFactors([1.0, 0.0, 0.0])

    def source(d):
        return noisy if d == 4 else exact

    # an 8-point full grid holds only exactly representable phases
    pick = sweep.select_qsvt_degree(source, 3, degrees=(4, 2), n_points=8)
    assert pick.parameter == 2 and [d for d, _ in pick.tried] == [4, 2]


def test_model_failure():
    assert sweep.qsvt_model_failure(0.01, 1) == pytest.approx(0.01)
    np.testing.assert_allclose(sweep.qsvt_model_failure(0.1, [1, 2]), [0.1, 0.19])


def test_precision_series_truncates_qsvt():
    tmpl = SweepConfig("qsvt", 1, phases=PhaseFactors(np.zeros(3)), grid="full", n_points=16)
    (s,) = sweep.precision_scaling_study([tmpl], range(1, 6), qsvt_max_m=3)
    assert s.m_values == [1, 2, 3] and s.truncated_at == 4


def test_exact_phase_helpers_agree_for_exact_protocols():
    f = sweep.exact_phase_failures_qsvt(3, PhaseFactors(np.zeros(3)))
    assert np.max(np.abs(f)) < 1e-12
    w = sweep.exact_phase_failures_windowed(3, "rectangular", 0)
    assert np.max(np.abs(w)) < 1e-12

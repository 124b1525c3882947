"""Canned figure runs behind ``qpelab report --figure NAME``.

Each builder returns ``{filename: text}`` with the data tables, a JSON summary
and one SVG. QSVT builders use the phase cache, so the first call per
``(delta, kappa, d, seed)`` pays for the optimization.
"""
from __future__ import annotations

import warnings
from typing import Any, Callable

import numpy as np

from . import report, sweep
from .cache import cached_phases
from .qpe import PhaseRegisterSpec, phase_success_probability, run_qpe
from .qsp import SignFunctionSpec, default_delta
from .windows import WindowSpec, best_alpha, make_window, spectrum_metrics

KAISER_TOY_PHI = 0.84375
KAISER_TOY_ALPHAS = (1e-5, 25.0, 200.0)
HEADLINE = (("rectangular", 5), ("cosine", 4), ("kaiser", 4))
QSVT_DEGREE = 64


def _alpha(window: str, p: int) -> float:
    if window != "kaiser":
        return 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return best_alpha(p)


def qsvt_phases(m: int, seed: int = 0, d: int = QSVT_DEGREE):
    return cached_phases(SignFunctionSpec(default_delta(m), 0.25, d), seed=seed).phases


def kaiser_figure(pr: dict) -> dict[str, str]:
    m = pr.get("m", 4)
    reg = PhaseRegisterSpec(m, 0)
    rows, table = [], []
    for a in KAISER_TOY_ALPHAS:
        spec = WindowSpec("kaiser", reg.n, a)
        win = make_window(spec)
        sm = spectrum_metrics(win)
        dist = run_qpe(KAISER_TOY_PHI, reg, spec)
        succ = phase_success_probability(dist, KAISER_TOY_PHI, m)
        rows.append((a, win, sm, dist))
        table.append((a, succ, sm.main_lobe_width_bins, sm.max_side_lobe_db))
    return {
        f"kaiser_m{m}.csv": report.csv_text(
            ["alpha", "success_probability", "main_lobe_width_bins", "max_side_lobe_db"], table),
        f"kaiser_m{m}.svg": report.svg_text(report.kaiser_panel(rows)),
    }


def _headline_results(pr: dict, with_qsvt: bool = True) -> list[sweep.SweepResult]:
    m = pr.get("m", 5)
    out = [sweep.run_sweep(sweep.SweepConfig("windowed", m, w, p, _alpha(w, p), n_points=pr["points"]))
           for w, p in HEADLINE]
    if with_qsvt:
        out.append(sweep.run_sweep(sweep.SweepConfig(
            "qsvt", m, phases=qsvt_phases(m, pr.get("seed", 0)), grid="full",
            n_points=pr.get("qsvt_points", 500))))
    return out


def success_figure(pr: dict) -> dict[str, str]:
    results = _headline_results(pr)
    curves = {r.config.label: (r.phis, r.success) for r in results}
    summary = {r.config.label: r.summary() for r in results}
    files = {f"success_{r.config.label}.csv": sweep.sweep_csv(r) for r in results}
    files["success.json"] = report.json_text(summary)
    files["success.svg"] = report.svg_text(report.success_plot(curves))
    return files


def cost_figure(pr: dict) -> dict[str, str]:
    results = _headline_results(pr)
    entries = [(r.config.label, r.config.cost(), r.log10_max_failure) for r in results]
    # the cost chart lists QSVT first, as the most expensive bar
    entries = entries[-1:] + entries[:-1]
    return {
        "cost.csv": report.csv_text(["label", "query_cost", "log10_max_failure"], entries),
        "cost.svg": report.svg_text(report.cost_plot(entries)),
    }


def scaling_figure(pr: dict) -> dict[str, str]:
    m = pr.get("m", 5)
    studies = [sweep.scaling_study(w, m, range(1, 7), pr["points"]) for w in ("cosine", "kaiser")]
    rows = [(st.window, pt.p, pt.alpha, pt.max_failure, int(pt.precision_limited))
            for st in studies for pt in st.points]
    fits = {st.window: ({"model": st.fit.model, "params": list(st.fit.params),
                         "residual_norm": st.fit.residual_norm} if st.fit else st.note)
            for st in studies}
    return {
        "scaling.csv": report.csv_text(["window", "p", "alpha", "max_failure", "precision_limited"], rows),
        "scaling.json": report.json_text({"fits": fits}),
        "scaling.svg": report.svg_text(report.scaling_plot(studies)),
    }


def precision_figure(pr: dict) -> dict[str, str]:
    templates = [sweep.SweepConfig("windowed", 1, w, p, _alpha(w, p), n_points=pr["points"])
                 for w, p in HEADLINE]
    series = sweep.precision_scaling_study(templates, range(1, pr["max_m"] + 1))
    # one phase set for every m, so the decline isolates the (1 - delta)^m effect
    phases = qsvt_phases(pr.get("m", 5), pr.get("seed", 0))
    q_points = []
    for m in range(3, pr["qsvt_max_m"] + 1):
        r = sweep.run_sweep(sweep.SweepConfig("qsvt", m, phases=phases,
                                              grid="full", n_points=pr["qsvt_points"]))
        q_points.append(sweep.PrecisionPoint(m, r.mean_success, r.std_success, r.max_failure))
    series.append(sweep.PrecisionSeries(f"qsvt_d{QSVT_DEGREE}", q_points))
    rows = [(s.label, pt.m, pt.mean_success, pt.std_success, pt.max_failure)
            for s in series for pt in s.points]
    return {
        "precision.csv": report.csv_text(["label", "m", "mean_success", "std_success", "max_failure"], rows),
        "precision.svg": report.svg_text(report.precision_plot(series)),
    }


def popcount_figure(pr: dict) -> dict[str, str]:
    m = pr.get("m", 5)
    fail = sweep.exact_phase_failures_qsvt(m, qsvt_phases(m, pr.get("seed", 0)))
    rep = sweep.popcount_asymmetry(m, fail)
    fig, ax = report._figure(figsize=(5, 3.4))
    ax.scatter(rep.popcounts, np.log10(np.maximum(1 - rep.success, 1e-16)), s=10)
    ax.set_xlabel("number of 1 bits")
    ax.set_ylabel("log10 failure")
    fig.tight_layout()
    return {
        f"popcount_m{m}.csv": report.csv_text(["bitstring", "popcount", "success_probability"], rep.rows()),
        f"popcount_m{m}.json": report.json_text({"spearman": rep.spearman}),
        f"popcount_m{m}.svg": report.svg_text(fig),
    }


BUILDERS: dict[str, Callable[[dict], dict[str, str]]] = {
    "kaiser": kaiser_figure,
    "success": success_figure,
    "cost": cost_figure,
    "scaling": scaling_figure,
    "precision": precision_figure,
    "popcount": popcount_figure,
}


def build_figure(pr: dict[str, Any]) -> dict[str, str]:
    return BUILDERS[pr["figure"]](pr)

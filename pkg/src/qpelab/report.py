"""Result files: CSV tables, JSON summaries and static SVG figures.

Every writer is deterministic for fixed inputs. SVGs are rendered with a
fixed hash salt and no date stamp, so reruns produce identical bytes.
"""
from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

FORMAT_VERSION = 1

_RC = {"svg.hashsalt": "qpelab", "svg.fonttype": "none", "font.size": 9}


def csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    """CSV with a header row; every row also carries ``format_version``."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(list(header) + ["format_version"])
    for row in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row]
                   + [FORMAT_VERSION])
    return buf.getvalue()


def json_text(data: Mapping) -> str:
    def clean(v):
        if isinstance(v, (np.floating, float)):
            v = float(v)
            return v if math.isfinite(v) else repr(v)
        if isinstance(v, np.integer):
            return int(v)
        if isinstance(v, np.bool_):
            return bool(v)
        if isinstance(v, Mapping):
            return {k: clean(x) for k, x in v.items()}
        if isinstance(v, (list, tuple, np.ndarray)):
            return [clean(x) for x in v]
        return v

    body = {"format_version": FORMAT_VERSION, **clean(dict(data))}
    return json.dumps(body, indent=2, sort_keys=True) + "\n"


def svg_text(fig) -> str:
    buf = io.StringIO()
    with plt.rc_context(_RC):
        fig.savefig(buf, format="svg", metadata={"Date": None})
    plt.close(fig)
    return buf.getvalue()


def emit_report(files: Mapping[str, str], output: str | Path, overwrite: bool = False) -> list[Path]:
    """Write ``{filename: text}`` into directory ``output``.

    Refuses to replace existing files unless ``overwrite`` is set; nothing is
    written if any target already exists.
    """
    out = Path(output)
    targets = [out / name for name in sorted(files)]
    if not overwrite:
        clash = [t for t in targets if t.exists()]
        if clash:
            raise FileExistsError(f"refusing to overwrite {clash[0]} (pass --overwrite)")
    out.mkdir(parents=True, exist_ok=True)
    for t in targets:
        t.write_text(files[t.name])
    return targets


# --- tables ---------------------------------------------------------------------

def window_csv(win) -> str:
    x = win.labels
    return csv_text(["signed_index", "basis_state", "amplitude"],
                    ((int(xi), b, float(a)) for b, (xi, a) in enumerate(zip(x, win.amplitudes))))


def distribution_csv(dist) -> str:
    n = dist.num_bits
    return csv_text(["bin", "bitstring", "probability"],
                    ((y, format(y, f"0{n}b"), float(pr)) for y, pr in enumerate(dist.probs)))


# --- figures --------------------------------------------------------------------

def _figure(*args, **kw):
    with plt.rc_context(_RC):
        return plt.subplots(*args, **kw)


def success_plot(curves: Mapping[str, tuple[np.ndarray, np.ndarray]]):
    """Success probability against phase, one line per method."""
    fig, ax = _figure(figsize=(6, 3.6))
    for label, (phi, succ) in curves.items():
        ax.plot(phi, succ, lw=0.8, label=label)
    ax.set_xlabel("eigenphase")
    ax.set_ylabel("success probability")
    ax.legend(fontsize=7)
    fig.tight_layout()
    return fig


def scaling_plot(studies):
    fig, ax = _figure(figsize=(5, 3.6))
    for st in studies:
        p = np.array([pt.p for pt in st.points])
        f = np.array([pt.max_failure for pt in st.points])
        lim = np.array([pt.precision_limited for pt in st.points])
        y = np.log10(np.where(f > 0, f, np.nan))
        line, = ax.plot(p[~lim], y[~lim], "o", label=st.window)
        if lim.any():
            ax.plot(p[lim], np.where(np.isfinite(y[lim]), y[lim], -16), "x", color=line.get_color())
        if st.fit is not None:
            pp = np.linspace(p.min(), p.max(), 100)
            ax.plot(pp, -st.fit.predict(pp), "-", lw=0.8, color=line.get_color())
    ax.axhline(-12, color="0.6", lw=0.6, ls=":")
    ax.set_xlabel("additional phase qubits p")
    ax.set_ylabel("log10 max failure")
    ax.legend(fontsize=7)
    fig.tight_layout()
    return fig


def cost_plot(entries: Sequence[tuple[str, int, float]]):
    """Bar chart of query cost, each bar annotated with its log10 max failure."""
    fig, ax = _figure(figsize=(5, 3.6))
    labels = [e[0] for e in entries]
    costs = [e[1] for e in entries]
    bars = ax.bar(range(len(entries)), costs, color="0.55")
    for b, (_, _, lf) in zip(bars, entries):
        ax.annotate(f"{lf:.2f}", (b.get_x() + b.get_width() / 2, b.get_height()),
                    ha="center", va="bottom", fontsize=7)
    ax.set_xticks(range(len(entries)), labels, fontsize=7)
    ax.set_ylabel("calls to the block encoding")
    fig.tight_layout()
    return fig


def precision_plot(series):
    fig, ax = _figure(figsize=(5, 3.6))
    for s in series:
        m = np.array([pt.m for pt in s.points])
        mu = np.array([pt.mean_success for pt in s.points])
        sd = np.array([pt.std_success for pt in s.points])
        line, = ax.plot(m, mu, "o-", ms=3, label=s.label)
        ax.fill_between(m, mu - sd, mu + sd, alpha=0.2, color=line.get_color())
    ax.set_xlabel("bits of precision m")
    ax.set_ylabel("success probability")
    ax.legend(fontsize=7)
    fig.tight_layout()
    return fig


def kaiser_panel(rows):
    """3x3 panel: window amplitudes, spectrum and readout histogram per alpha.

    ``rows`` holds ``(alpha, window_state, spectrum_metrics, distribution)``.
    """
    fig, axes = _figure(len(rows), 3, figsize=(8, 2.2 * len(rows)), squeeze=False)
    for ax_row, (alpha, win, spec, dist) in zip(axes, rows):
        x, w = win.ordered()
        ax_row[0].bar(x, w, width=0.8)
        ax_row[0].set_ylabel(f"alpha={alpha:g}")
        mag = spec.spectrum / spec.spectrum.max()
        f = (np.arange(mag.size) - mag.size // 2) / spec.pad_factor
        ax_row[1].plot(f, 20 * np.log10(np.maximum(mag, 1e-12)), lw=0.7)
        ax_row[1].set_ylim(-120, 5)
        ax_row[2].bar(np.arange(len(dist.probs)), dist.probs, width=0.8)
    axes[0][0].set_title("window")
    axes[0][1].set_title("spectrum (dB)")
    axes[0][2].set_title("readout")
    fig.tight_layout()
    return fig

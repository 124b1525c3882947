"""Eigenphase sweeps, aggregate statistics and scaling fits.

Windowed methods are periodic in ``phi`` with period ``1/2^n`` and are swept
over one period by default; the QSVT protocol is not periodic and is always
swept over ``[0, 1)``.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import optimize, stats

from .qpe import (MAX_CIRCUIT_QUBITS, PhaseRegisterSpec, _accept_offsets, emulate_qpe_batch,
                  emulator_chunk, period_failure_curve, run_qpe)
from .qsp import PhaseFactors
from .qsvt_qpe import query_cost, run_qsvt_batch
from .windows import WindowKind, WindowSpec, best_alpha, make_window

FORMAT_VERSION = 1
PRECISION_FLOOR = 1e-12
DEFAULT_POINTS = 10_000


@dataclass(frozen=True, eq=False)
class SweepConfig:
    method: str                      # "windowed" or "qsvt"
    m: int
    window: str = "rectangular"
    p: int = 0
    alpha: float = 0.0
    phases: PhaseFactors | None = None
    grid: str = "period"             # "period" or "full"
    n_points: int = DEFAULT_POINTS
    engine: str = "emulator"         # windowed only: "emulator" or "statevector"

    def __post_init__(self) -> None:
        if self.method not in ("windowed", "qsvt"):
            raise ValueError(f"unknown method {self.method!r}")
        if self.grid not in ("period", "full"):
            raise ValueError(f"unknown grid {self.grid!r}")
        if self.n_points < 1:
            raise ValueError("n_points must be >= 1")
        PhaseRegisterSpec(self.m, self.p)
        if self.method == "qsvt":
            if self.phases is None:
                raise ValueError("qsvt sweeps need phase factors")
            if self.grid != "full":
                raise ValueError("qsvt sweeps are not periodic; use the full grid")
        else:
            self.window_spec  # validates kind and alpha
            if self.engine not in ("emulator", "statevector"):
                raise ValueError(f"unknown engine {self.engine!r}")

    @property
    def n(self) -> int:
        return self.m + self.p

    @property
    def window_spec(self) -> WindowSpec:
        return WindowSpec(WindowKind(self.window), self.n, self.alpha)

    @property
    def degree(self) -> int:
        return self.phases.degree if self.phases is not None else 0

    @property
    def label(self) -> str:
        if self.method == "qsvt":
            return f"qsvt_m{self.m}_d{self.degree}_{self.grid}_{self.n_points}"
        w = self.window if self.window != "kaiser" else f"kaiser{self.alpha:g}"
        return f"windowed_{w}_m{self.m}_p{self.p}_{self.grid}_{self.n_points}"

    def cost(self) -> int:
        if self.method == "qsvt":
            return query_cost("qsvt", self.m, d=self.degree)
        return query_cost("windowed", self.m, p=self.p)


@dataclass(frozen=True, eq=False)
class SweepResult:
    config: SweepConfig
    phis: np.ndarray
    failure: np.ndarray

    @property
    def success(self) -> np.ndarray:
        return 1.0 - self.failure

    @property
    def max_failure(self) -> float:
        return float(self.failure.max())

    @property
    def min_success(self) -> float:
        return 1.0 - self.max_failure

    @property
    def mean_success(self) -> float:
        return float(np.mean(self.success))

    @property
    def std_success(self) -> float:
        return float(np.std(self.failure))  # same spread, better resolved

    @property
    def precision_limited(self) -> bool:
        return self.max_failure < PRECISION_FLOOR

    @property
    def log10_max_failure(self) -> float:
        mf = self.max_failure
        return math.log10(mf) if mf > 0 else float("-inf")

    def summary(self) -> dict:
        c = self.config
        out = {
            "format_version": FORMAT_VERSION,
            "method": c.method, "m": c.m, "grid": c.grid, "n_points": c.n_points,
            "query_cost": c.cost(),
            "min_success": self.min_success, "mean_success": self.mean_success,
            "std_success": self.std_success, "max_failure": self.max_failure,
            "log10_max_failure": self.log10_max_failure,
            "precision_limited": self.precision_limited,
        }
        if c.method == "qsvt":
            out["degree"] = c.degree
        else:
            out.update(window=c.window, p=c.p, alpha=c.alpha)
        return out


def sweep_grid(config: SweepConfig) -> np.ndarray:
    L = config.n_points
    if config.grid == "period":
        return np.arange(L) / (L * 2**config.n)
    return np.arange(L) / L


def _window_failures(config: SweepConfig, phis: np.ndarray, chunk: int | None = None) -> np.ndarray:
    win = make_window(config.window_spec)
    chunk = chunk or emulator_chunk(config.n)
    N = 2**config.n
    offsets = _accept_offsets(config.p)
    out = np.empty(phis.size)
    for lo in range(0, phis.size, chunk):
        ph = phis[lo:lo + chunk]
        if config.engine == "statevector":
            probs = np.array([run_qpe(x, PhaseRegisterSpec(config.m, config.p), config.window_spec).probs
                              for x in ph])
        else:
            probs = emulate_qpe_batch(ph, win)
        base = np.floor(N * ph).astype(np.int64)
        keep = np.zeros(probs.shape, dtype=bool)
        keep[np.arange(ph.size)[:, None], np.mod(base[:, None] + offsets[None, :], N)] = True
        out[lo:lo + chunk] = np.where(keep, 0.0, probs).sum(axis=1)
    return out


def run_sweep(config: SweepConfig) -> SweepResult:
    """Failure probability at every grid phase, with aggregates.

    Failure is summed over rejected readouts (rather than taken as one minus
    the accepted mass) so that tails below ``1e-16`` are resolved.
    """
    if config.method == "qsvt":
        phis = sweep_grid(config)
        run = run_qsvt_batch(config.m, config.phases, phis)
        M = 2**config.m
        lo = np.floor(M * phis).astype(np.int64) % M
        keep = np.zeros(run.probs.shape, dtype=bool)
        rows = np.arange(phis.size)
        keep[rows, lo] = True
        keep[rows, (lo + 1) % M] = True
        return SweepResult(config, phis, np.where(keep, 0.0, run.probs).sum(axis=1))

    if config.engine == "statevector" and config.n > MAX_CIRCUIT_QUBITS:
        raise ValueError(f"n={config.n} exceeds the statevector cap of {MAX_CIRCUIT_QUBITS}; "
                         "use engine='emulator'")
    if config.grid == "period" and config.engine == "emulator":
        phis, failure = period_failure_curve(make_window(config.window_spec), config.m, config.n_points)
        return SweepResult(config, phis, failure)
    phis = sweep_grid(config)
    return SweepResult(config, phis, _window_failures(config, phis))


# --- CSV / JSON -----------------------------------------------------------------

def sweep_csv(result: SweepResult) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["phi", "success_probability", "failure_probability", "format_version"])
    for phi, f in zip(result.phis, result.failure):
        w.writerow([repr(float(phi)), repr(float(1.0 - f)), repr(float(f)), FORMAT_VERSION])
    return buf.getvalue()


# --- scaling fits ---------------------------------------------------------------

@dataclass(frozen=True)
class ScalingFit:
    """``y = log10(1/delta)`` against ``p``.

    ``log_inv_delta``: ``y = a + b p``; ``loglog_inv_delta``: ``y = exp(a + b p)``.
    Both are least-squares fits of ``y`` itself, so residuals are comparable.
    """

    model: str
    params: tuple[float, float]
    residual_norm: float
    n_points: int

    def predict(self, p) -> np.ndarray:
        a, b = self.params
        p = np.asarray(p, dtype=float)
        if self.model == "log_inv_delta":
            return a + b * p
        return np.exp(a + b * p)


def fit_scaling(p_values: Sequence[float], max_failures: Sequence[float], model: str) -> ScalingFit:
    p = np.asarray(p_values, dtype=float)
    f = np.asarray(max_failures, dtype=float)
    if p.size < 3:
        raise ValueError("a scaling fit needs at least 3 points")
    if np.any(f <= 0) or np.any(f >= 1):
        raise ValueError("failures must lie in (0, 1)")
    y = -np.log10(f)
    if model == "log_inv_delta":
        coef = np.polyfit(p, y, 1)
        params = (float(coef[1]), float(coef[0]))
    elif model == "loglog_inv_delta":
        b0, a0 = np.polyfit(p, np.log(y), 1)
        res = optimize.least_squares(lambda c: np.exp(c[0] + c[1] * p) - y, [a0, b0])
        params = (float(res.x[0]), float(res.x[1]))
    else:
        raise ValueError(f"unknown model {model!r}")
    fit = ScalingFit(model, params, 0.0, int(p.size))
    resid = float(np.linalg.norm(fit.predict(p) - y))
    return ScalingFit(model, params, resid, int(p.size))


@dataclass(frozen=True)
class ScalingPoint:
    p: int
    alpha: float
    max_failure: float
    precision_limited: bool


@dataclass(frozen=True, eq=False)
class ScalingStudy:
    window: str
    m: int
    points: list[ScalingPoint]
    fit: ScalingFit | None
    note: str = ""

    def usable(self) -> list[ScalingPoint]:
        return [pt for pt in self.points if not pt.precision_limited]


def scaling_study(window: str, m: int = 5, p_range: Sequence[int] = range(1, 7),
                  n_points: int = DEFAULT_POINTS, model: str | None = None) -> ScalingStudy:
    """Max failure against extra qubits ``p``, plus the expected fit form.

    Cosine uses the ``log(1/delta)`` form and Kaiser ``log log(1/delta)``;
    precision-limited points are excluded from the fit.
    """
    if window not in ("cosine", "kaiser"):
        raise ValueError("scaling studies cover the cosine and kaiser windows")
    points = []
    for p in p_range:
        alpha = best_alpha(p) if window == "kaiser" else 0.0
        res = run_sweep(SweepConfig("windowed", m, window, p, alpha, n_points=n_points))
        points.append(ScalingPoint(int(p), alpha, res.max_failure, res.precision_limited))
    model = model or ("log_inv_delta" if window == "cosine" else "loglog_inv_delta")
    usable = [pt for pt in points if not pt.precision_limited]
    if len(usable) < 3:
        return ScalingStudy(window, m, points, None, "fewer than 3 usable points; fit refused")
    fit = fit_scaling([pt.p for pt in usable], [pt.max_failure for pt in usable], model)
    return ScalingStudy(window, m, points, fit)


# --- precision scaling ----------------------------------------------------------

@dataclass(frozen=True)
class PrecisionPoint:
    m: int
    mean_success: float
    std_success: float
    max_failure: float


@dataclass(frozen=True, eq=False)
class PrecisionSeries:
    label: str
    points: list[PrecisionPoint]
    truncated_at: int | None = None   # first m skipped because of the budget

    @property
    def m_values(self) -> list[int]:
        return [pt.m for pt in self.points]


def precision_scaling_study(methods: Sequence[SweepConfig], m_range: Sequence[int] = range(1, 15),
                            qsvt_max_m: int = 8) -> list[PrecisionSeries]:
    """Mean and std of success against ``m`` for each method template.

    ``methods`` are configs whose ``m`` is replaced along ``m_range``. QSVT
    series stop at ``qsvt_max_m`` (the statevector budget); the series records
    where it was truncated.
    """
    out = []
    for tmpl in methods:
        pts: list[PrecisionPoint] = []
        truncated = None
        for m in m_range:
            if tmpl.method == "qsvt" and m > qsvt_max_m:
                truncated = m
                break
            cfg = SweepConfig(tmpl.method, m, tmpl.window, tmpl.p, tmpl.alpha, tmpl.phases,
                              tmpl.grid, tmpl.n_points, tmpl.engine)
            r = run_sweep(cfg)
            pts.append(PrecisionPoint(m, r.mean_success, r.std_success, r.max_failure))
        label = tmpl.label.split("_m")[0]
        out.append(PrecisionSeries(label, pts, truncated))
    return out


def qsvt_model_failure(delta: float, m) -> np.ndarray:
    """Failure predicted by ``1 - delta_fail = (1 - delta)^m``."""
    return 1.0 - (1.0 - delta) ** np.asarray(m, dtype=float)


# --- popcount asymmetry ---------------------------------------------------------

@dataclass(frozen=True, eq=False)
class PopcountReport:
    m: int
    bitstrings: list[str]
    popcounts: np.ndarray
    success: np.ndarray
    spearman: float

    def rows(self) -> list[tuple[str, int, float]]:
        return list(zip(self.bitstrings, self.popcounts.tolist(), self.success.tolist()))


def popcount_asymmetry(m: int, failures: Sequence[float], tie_tol: float = 1e-13) -> PopcountReport:
    """Rank correlation between popcount and failure over the ``2^m`` exact phases.

    ``failures[y]`` is the failure at ``phi = y / 2^m``. Failures are rounded to
    ``tie_tol`` before ranking so round-off does not create spurious order; a
    constant failure profile has correlation 0.
    """
    f = np.asarray(failures, dtype=float)
    if f.size != 2**m:
        raise ValueError(f"need {2**m} failures, got {f.size}")
    pc = np.array([bin(y).count("1") for y in range(2**m)])
    rounded = np.round(f / tie_tol) * tie_tol
    if np.ptp(rounded) == 0 or np.ptp(pc) == 0:
        rho = 0.0
    else:
        rho = float(stats.spearmanr(pc, rounded).statistic)
    bits = [format(y, f"0{m}b") for y in range(2**m)]
    return PopcountReport(m, bits, pc, 1.0 - f, rho)


def exact_phase_failures_qsvt(m: int, phases: PhaseFactors) -> np.ndarray:
    phis = np.arange(2**m) / 2**m
    run = run_qsvt_batch(m, phases, phis)
    return 1.0 - run.probs[np.arange(2**m), np.arange(2**m)] - run.probs[np.arange(2**m), (np.arange(2**m) + 1) % 2**m]


def exact_phase_failures_windowed(m: int, window: str, p: int, alpha: float = 0.0) -> np.ndarray:
    cfg = SweepConfig("windowed", m, window, p, alpha, grid="full", n_points=2**m)
    return run_sweep(cfg).failure


# --- resource selection ---------------------------------------------------------

@dataclass(frozen=True)
class Selection:
    method: str
    parameter: int                  # p for windows, d for qsvt
    max_failure: float
    query_cost: int
    tried: list[tuple[int, float]] = field(default_factory=list)


def select_window_resources(window: str, m: int = 5, threshold: float = 0.99,
                            p_max: int = 8, n_points: int = DEFAULT_POINTS) -> Selection:
    """Smallest ``p`` whose minimum success reaches ``threshold``."""
    tried = []
    for p in range(p_max + 1):
        alpha = best_alpha(p) if window == "kaiser" else 0.0
        cfg = SweepConfig("windowed", m, window, p, alpha, n_points=n_points)
        r = run_sweep(cfg)
        tried.append((p, r.max_failure))
        if r.min_success >= threshold:
            return Selection(window, p, r.max_failure, cfg.cost(), tried)
    raise ValueError(f"no p <= {p_max} reaches minimum success {threshold}")


def select_qsvt_degree(phase_source: Callable[[int], PhaseFactors], m: int = 5,
                       threshold: float = 0.99, degrees: Sequence[int] = (8, 16, 32, 64, 128),
                       n_points: int = DEFAULT_POINTS) -> Selection:
    """Smallest degree whose QSVT sweep reaches ``threshold``.

    ``phase_source(d)`` supplies certified phases for degree ``d``.
    """
    tried = []
    for d in degrees:
        cfg = SweepConfig("qsvt", m, phases=phase_source(d), grid="full", n_points=n_points)
        r = run_sweep(cfg)
        tried.append((d, r.max_failure))
        if r.min_success >= threshold:
            return Selection("qsvt", d, r.max_failure, cfg.cost(), tried)
    raise ValueError(f"no degree in {list(degrees)} reaches minimum success {threshold}")

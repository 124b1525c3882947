"""Quantum signal processing for the shifted sign function.

Convention ("reflection-Wx, real-part readout"): for signal value ``x`` the
sequence is

    U(x) = e^{i phi_0 Z} W(x) e^{i phi_1 Z} W(x) ... W(x) e^{i phi_d Z},
    W(x) = [[x, i sqrt(1-x^2)], [i sqrt(1-x^2), x]],

and the realized function is ``Re U(x)[0, 0]``. The circuit in
:mod:`qpelab.qsvt_qpe` reproduces this amplitude gate for gate.

The target is the erf-smoothed shifted sign function

    P(x) = -(1/(1 + D/4)) (-1 + D/4 + E(1/sqrt2 - x) + E(1/sqrt2 + x)),
    E(y) = erf(sqrt(2)/k * sqrt(log(2/(pi D^2))) * y),

which is ``-1`` at ``x = 0`` and close to ``1 - D/2`` at ``x = 1``.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import optimize, special

CONVENTION = "reflection-Wx, real-part readout"
THRESHOLD = 1.0 / math.sqrt(2.0)
# strict upper limit on kappa for deterministic bit rounding
KAPPA_LIMIT = 2.0 * (math.cos(3.0 * math.pi / 16.0) - THRESHOLD)
KAPPA_MAX = 0.25
FAILURE_DELTA = 0.5
# the steepness sqrt(log(2 / (pi delta^2))) is real only below this
DELTA_MAX = math.sqrt(2.0 / math.pi)


def analytic_delta_bound(m: int, delta_fail: float = 0.01) -> float:
    """``sqrt(2 delta_fail / (m + 1))``, necessary for success ``1 - delta_fail``."""
    return math.sqrt(2.0 * delta_fail / (m + 1))


def default_delta(m: int, delta_fail: float = 0.01) -> float:
    """Plateau deviation for an ``m``-bit run with overall failure ``delta_fail``.

    Takes the stricter of the analytic bound and the per-step budget implied
    by ``1 - delta_fail = (1 - delta)^m``.
    """
    per_step = 1.0 - (1.0 - delta_fail) ** (1.0 / m)
    return min(analytic_delta_bound(m, delta_fail), per_step)


@dataclass(frozen=True)
class SignFunctionSpec:
    delta: float
    kappa: float
    degree: int

    def __post_init__(self) -> None:
        if not 0.0 < self.delta < DELTA_MAX:
            raise ValueError(f"delta must lie in (0, sqrt(2/pi)) for a real steepness, got {self.delta}")
        if not 0.0 < self.kappa <= KAPPA_MAX:
            raise ValueError(f"kappa must lie in (0, {KAPPA_MAX}], got {self.kappa}")
        if self.degree < 0 or self.degree % 2:
            raise ValueError(f"degree must be an even non-negative integer, got {self.degree}")

    @property
    def steepness(self) -> float:
        return math.sqrt(2.0) / self.kappa * math.sqrt(math.log(2.0 / (math.pi * self.delta**2)))

    @property
    def within_rounding_limit(self) -> bool:
        """Whether the band is narrow enough to round every bit deterministically."""
        return self.kappa < KAPPA_LIMIT


@dataclass(frozen=True, eq=False)
class PhaseFactors:
    angles: np.ndarray
    convention: str = CONVENTION

    def __post_init__(self) -> None:
        a = np.asarray(self.angles, dtype=float).reshape(-1)
        if a.size < 1:
            raise ValueError("need at least one phase")
        if not np.all(np.isfinite(a)):
            raise ValueError("phases must be finite")
        object.__setattr__(self, "angles", a)

    @property
    def degree(self) -> int:
        return self.angles.size - 1


# --- functions ------------------------------------------------------------------

def erf(x):
    """Error function (scipy); accepts scalars or arrays."""
    out = special.erf(np.asarray(x, dtype=float))
    return float(out) if np.ndim(out) == 0 else out


def target_function(x, spec: SignFunctionSpec):
    x = np.asarray(x, dtype=float)
    a = spec.steepness
    d4 = spec.delta / 4.0
    # the erf pair is summed first so that P(x) == P(-x) holds bit for bit
    pair = special.erf(a * (THRESHOLD - x)) + special.erf(a * (THRESHOLD + x))
    val = -(1.0 / (1.0 + d4)) * ((-1.0 + d4) + pair)
    return float(val) if val.ndim == 0 else val


def _check_x(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x) > 1.0 + 1e-12) or not np.all(np.isfinite(x)):
        raise ValueError("signal value must satisfy |x| <= 1")
    return np.clip(x, -1.0, 1.0)


def _signal_blocks(x: np.ndarray) -> np.ndarray:
    s = np.sqrt(1.0 - x**2)
    w = np.empty(x.shape + (2, 2), dtype=complex)
    w[..., 0, 0] = x
    w[..., 1, 1] = x
    w[..., 0, 1] = 1j * s
    w[..., 1, 0] = 1j * s
    return w


def _rotation(angle: float) -> np.ndarray:
    return np.array([np.exp(1j * angle), np.exp(-1j * angle)])


def qsp_unitary(angles, x) -> np.ndarray:
    """The full 2x2 QSP product for every ``x`` (shape ``x.shape + (2, 2)``)."""
    angles = np.asarray(angles, dtype=float).reshape(-1)
    x = _check_x(x)
    w = _signal_blocks(x)
    u = np.broadcast_to(np.diag(_rotation(angles[0])), w.shape).copy()
    for phi in angles[1:]:
        u = (u @ w) * _rotation(phi)  # right-multiplying by a diagonal scales columns
    return u


def qsp_amplitude(phases: PhaseFactors, x):
    """Complex ``(0, 0)`` element of the QSP product."""
    amp = qsp_unitary(phases.angles, x)[..., 0, 0]
    return complex(amp) if amp.ndim == 0 else amp


def qsp_response(phases: PhaseFactors, x):
    """Real part of :func:`qsp_amplitude`."""
    val = np.real(qsp_unitary(phases.angles, x)[..., 0, 0])
    return float(val) if val.ndim == 0 else val


def _response_and_gradient(angles: np.ndarray, w: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Response on a grid and its derivative with respect to every phase.

    With ``U = L_j R_j`` split just after rotation ``j``, the derivative of
    ``U[0,0]`` is ``i (L_j[0,0] R_j[0,0] - L_j[0,1] R_j[1,0])``.
    """
    d = angles.size - 1
    g = w.shape[0]
    left = np.empty((d + 1, g, 2, 2), dtype=complex)
    cur = np.broadcast_to(np.diag(_rotation(angles[0])), (g, 2, 2)).copy()
    left[0] = cur
    for j in range(1, d + 1):
        cur = (cur @ w) * _rotation(angles[j])
        left[j] = cur
    # right products only need their first column
    col = np.zeros((g, 2), dtype=complex)
    col[:, 0] = 1.0
    grad = np.empty((d + 1, g))
    for j in range(d, -1, -1):
        dj = 1j * (left[j][:, 0, 0] * col[:, 0] - left[j][:, 0, 1] * col[:, 1])
        grad[j] = dj.real
        if j > 0:
            col = np.einsum("gab,gb->ga", w, _rotation(angles[j])[None, :] * col)
    return left[d][:, 0, 0].real, grad


# --- optimisation ---------------------------------------------------------------

def fit_grid(spec: SignFunctionSpec, grid_size: int) -> np.ndarray:
    """Uniform points on ``[0, 1]`` outside the unconstrained band."""
    x = np.linspace(0.0, 1.0, int(grid_size))
    return x[np.abs(x - THRESHOLD) >= spec.kappa / 2.0]


def chebyshev_fit(spec: SignFunctionSpec, n_nodes: int | None = None) -> np.ndarray:
    """Even Chebyshev coefficients of the target by discrete cosine projection."""
    d = spec.degree
    n_nodes = n_nodes or 4 * (d + 1)
    theta = (np.arange(n_nodes) + 0.5) * np.pi / n_nodes
    f = target_function(np.cos(theta), spec)
    k = np.arange(d + 1)
    c = 2.0 / n_nodes * np.cos(np.outer(k, theta)) @ f
    c[0] /= 2.0
    c[1::2] = 0.0
    return c


def _fit(angles0: np.ndarray, x: np.ndarray, y: np.ndarray, maxiter: int) -> np.ndarray:
    w = _signal_blocks(x)
    n = x.size

    def fun(a):
        r, g = _response_and_gradient(a, w)
        e = r - y
        return float(e @ e / n), 2.0 * (g @ e) / n

    res = optimize.minimize(fun, angles0, jac=True, method="L-BFGS-B",
                            options={"maxiter": maxiter, "ftol": 1e-16, "gtol": 1e-12})
    return res.x


def max_deviation(phases: PhaseFactors, spec: SignFunctionSpec, grid_size: int) -> float:
    x = fit_grid(spec, grid_size)
    return float(np.max(np.abs(qsp_response(phases, x) - target_function(x, spec))))


def plateau_deviations(phases: PhaseFactors, spec: SignFunctionSpec,
                       grid_size: int = 20000) -> tuple[float, float]:
    """Max deviation from the target on the ``-1`` side (x below the band)
    and on the ``+1`` side (x above it)."""
    x = fit_grid(spec, grid_size)
    dev = np.abs(qsp_response(phases, x) - target_function(x, spec))
    low = x < THRESHOLD
    return float(dev[low].max()), float(dev[~low].max())


@dataclass(frozen=True, eq=False)
class PhaseFit:
    """Result of :func:`optimize_phases`; unpacks as ``(phases, achieved_delta)``."""

    phases: PhaseFactors
    achieved_delta: float
    spec: SignFunctionSpec
    mse: float = float("nan")
    restarts: list[float] = field(default_factory=list)

    @property
    def converged(self) -> bool:
        return self.achieved_delta <= FAILURE_DELTA

    @property
    def certified(self) -> bool:
        return self.achieved_delta <= self.spec.delta

    def __iter__(self):
        yield self.phases
        yield self.achieved_delta


class PhaseOptimizationError(RuntimeError):
    def __init__(self, fit: PhaseFit) -> None:
        super().__init__(f"phase optimisation did not converge (achieved delta {fit.achieved_delta:.3g})")
        self.fit = fit


def optimize_phases(spec: SignFunctionSpec, grid_size: int = 2000, *, seed: int = 0,
                    restarts: int = 3, maxiter: int = 5000, target=None) -> PhaseFit:
    """Fit QSP phases to the target by least squares on ``[0, 1]`` minus the band.

    Phases first reproduce the Chebyshev projection of the target (from the
    ``(pi/4, 0, ..., 0, pi/4)`` starting point), then are refined against the
    target itself. ``restarts`` perturbed copies are refined as well and the
    best, judged by certified deviation on a 10x finer grid, is kept.

    ``target`` optionally replaces the target with any callable on ``[0, 1]``
    (the band is still excluded). Raises :class:`PhaseOptimizationError`, with
    the best phases attached, if the deviation exceeds 0.5.
    """
    d = spec.degree
    if grid_size < 10 * max(d, 1):
        raise ValueError(f"grid_size must be at least 10*degree = {10 * d}")
    f = (lambda x: target_function(x, spec)) if target is None else target
    x = fit_grid(spec, grid_size)
    y = np.asarray(f(x), dtype=float)
    x_fine = fit_grid(spec, 10 * grid_size)
    y_fine = np.asarray(f(x_fine), dtype=float)

    def certify(a: np.ndarray) -> float:
        return float(np.max(np.abs(qsp_unitary(a, x_fine)[:, 0, 0].real - y_fine)))

    start = np.zeros(d + 1)
    if d > 0:
        start[0] = start[-1] = np.pi / 4
    else:
        start[0] = float(np.arccos(np.clip(np.mean(y), -1, 1)))
    if target is None and d > 0:
        xs = np.linspace(0.0, 1.0, grid_size)
        cheb = np.polynomial.chebyshev.chebval(xs, chebyshev_fit(spec))
        start = _fit(start, xs, np.clip(cheb, -1, 1), maxiter)

    rng = np.random.default_rng(seed)
    best = _fit(start, x, y, maxiter)
    best_dev = certify(best)
    devs = [best_dev]
    for _ in range(restarts):
        cand = _fit(best + 0.05 * rng.standard_normal(d + 1), x, y, maxiter)
        dev = certify(cand)
        devs.append(dev)
        if dev < best_dev:
            best, best_dev = cand, dev
    r = qsp_unitary(best, x)[:, 0, 0].real - y
    fit = PhaseFit(PhaseFactors(best), best_dev, spec, float(r @ r / r.size), devs)
    if not fit.converged:
        raise PhaseOptimizationError(fit)
    return fit


# --- serialisation --------------------------------------------------------------

def phases_to_csv(fit: PhaseFit) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["# format_version", 1])
    w.writerow(["# convention", fit.phases.convention])
    w.writerow(["# degree", fit.spec.degree])
    w.writerow(["# delta", repr(fit.spec.delta)])
    w.writerow(["# kappa", repr(fit.spec.kappa)])
    w.writerow(["# achieved_delta", repr(fit.achieved_delta)])
    w.writerow(["index", "angle"])
    for i, a in enumerate(fit.phases.angles):
        w.writerow([i, repr(float(a))])
    return buf.getvalue()


def phases_from_csv(text: str) -> PhaseFit:
    meta: dict[str, str] = {}
    angles: list[float] = []
    for row in csv.reader(io.StringIO(text)):
        if not row:
            continue
        if row[0].startswith("#"):
            meta[row[0][1:].strip()] = row[1]
        elif row[0] != "index":
            angles.append(float(row[1]))
    if meta.get("format_version") != "1":
        raise ValueError("unsupported phase file format")
    spec = SignFunctionSpec(float(meta["delta"]), float(meta["kappa"]), int(meta["degree"]))
    phases = PhaseFactors(np.array(angles), meta["convention"])
    if phases.degree != spec.degree:
        raise ValueError("phase count does not match the recorded degree")
    return PhaseFit(phases, float(meta["achieved_delta"]), spec)


def save_phases(fit: PhaseFit, path: str | Path) -> None:
    Path(path).write_text(phases_to_csv(fit))


def load_phases(path: str | Path) -> PhaseFit:
    return phases_from_csv(Path(path).read_text())

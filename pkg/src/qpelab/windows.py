"""Window states for the phase register and their spectral characteristics.

Four families are supported: rectangular, cosine, sine and Kaiser. Each is
tabulated on its native index range, normalized, and stored indexed by
computational basis state.

Index conventions:

* rectangular and sine windows use ``x = 0 .. N-1`` and basis state ``x``;
* cosine and Kaiser windows use the signed, half-open range
  ``x = -N/2 .. N/2-1`` mapped to basis state ``x mod N`` (two's complement).

The signed windows therefore need the most significant phase qubit to apply
``U^(-N/2)`` rather than ``U^(N/2)``; see :func:`qpelab.qpe.controlled_powers`.
"""
from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import special

from .statevector import (GateSpec, hadamard, pauli_x, dagger)


class WindowKind(str, enum.Enum):
    RECTANGULAR = "rectangular"
    COSINE = "cosine"
    SINE = "sine"
    KAISER = "kaiser"


SIGNED_KINDS = frozenset({WindowKind.COSINE, WindowKind.KAISER})


@dataclass(frozen=True)
class WindowSpec:
    kind: WindowKind
    num_qubits: int
    alpha: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", WindowKind(self.kind))
        if self.num_qubits < 1:
            raise ValueError("num_qubits must be >= 1")
        if not (self.alpha >= 0 and math.isfinite(self.alpha)):
            raise ValueError("alpha must be a finite non-negative number")
        if self.kind is not WindowKind.KAISER and self.alpha != 0:
            raise ValueError(f"alpha only applies to Kaiser windows, not {self.kind.value}")

    @property
    def signed(self) -> bool:
        return self.kind in SIGNED_KINDS

    @property
    def label(self) -> str:
        if self.kind is WindowKind.KAISER:
            return f"kaiser(alpha={self.alpha:g})"
        return self.kind.value


@dataclass(frozen=True, eq=False)
class WindowState:
    """Normalized, real, non-negative window amplitudes indexed by basis state."""

    amplitudes: np.ndarray
    source_spec: WindowSpec

    @property
    def num_qubits(self) -> int:
        return self.source_spec.num_qubits

    @property
    def labels(self) -> np.ndarray:
        """Native index ``x`` of every basis state."""
        return native_labels(self.num_qubits, self.source_spec.signed)

    def ordered(self) -> tuple[np.ndarray, np.ndarray]:
        """``(x, w)`` sorted by native index, i.e. as a contiguous time series."""
        x = self.labels
        order = np.argsort(x, kind="stable")
        return x[order], self.amplitudes[order]


def native_labels(num_qubits: int, signed: bool) -> np.ndarray:
    b = np.arange(2**num_qubits)
    if not signed:
        return b
    half = 2 ** (num_qubits - 1)
    return np.where(b < half, b, b - 2**num_qubits)


# --- Bessel I0 ----------------------------------------------------------------

I0_OVERFLOW = 713.0  # true overflow is near 713.98


def bessel_i0(x: float) -> float:
    """Modified Bessel function of the first kind, order zero, for ``x >= 0``."""
    if x < 0:
        raise ValueError("bessel_i0 is only defined here for x >= 0")
    if x > I0_OVERFLOW:
        raise OverflowError(f"I0({x}) exceeds the float range; use log_bessel_i0")
    if x < 700.0:
        return float(special.i0(x))
    # scipy's i0 overflows in an intermediate exp from about 710
    half = math.exp(x / 2.0)
    return float(special.i0e(x)) * half * half


def log_bessel_i0(x: np.ndarray | float) -> np.ndarray:
    """``log(I0(x))`` without overflow, via the exponentially scaled I0."""
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ValueError("log_bessel_i0 requires x >= 0")
    return np.log(special.i0e(x)) + x


# --- window construction ------------------------------------------------------

def _raw_window(spec: WindowSpec) -> np.ndarray:
    n = spec.num_qubits
    N = 2**n
    x = native_labels(n, spec.signed).astype(float)
    if spec.kind is WindowKind.RECTANGULAR:
        return np.full(N, 1.0 / math.sqrt(N))
    if spec.kind is WindowKind.COSINE:
        return math.sqrt(2.0 / N) * np.cos(np.pi * x / N)
    if spec.kind is WindowKind.SINE:
        return np.sin(np.pi * (x + 1) / (N + 1))
    # Kaiser: ratio I0(pi a sqrt(1-(x/(N/2))^2)) / I0(pi a), evaluated in log space
    beta = np.pi * spec.alpha
    u = np.sqrt(np.clip(1.0 - (x / (N / 2)) ** 2, 0.0, None))
    return np.exp(log_bessel_i0(beta * u) - log_bessel_i0(beta)) / N


def make_window(spec: WindowSpec) -> WindowState:
    w = _raw_window(spec)
    w = np.clip(w, 0.0, None)  # cos(-pi/2) evaluates to ~ -6e-17
    w = w / np.linalg.norm(w)
    return WindowState(w, spec)


def window(kind: str | WindowKind, num_qubits: int, alpha: float = 0.0) -> WindowState:
    return make_window(WindowSpec(WindowKind(kind), num_qubits, alpha))


# --- spectra ------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SpectrumMetrics:
    spectrum: np.ndarray          # |DTFT| on the padded grid, DC at index len//2
    main_lobe_width: float        # null-to-null, padded-grid bins
    max_side_lobe_db: float       # relative to peak; -inf if there are no side lobes
    pad_factor: int

    @property
    def main_lobe_width_bins(self) -> float:
        """Main lobe width in units of the unpadded DFT bin spacing."""
        return self.main_lobe_width / self.pad_factor


def spectrum_metrics(win: WindowState, pad_factor: int = 64) -> SpectrumMetrics:
    """Magnitude spectrum of the zero-padded window and its lobe structure.

    The main lobe runs between the local minima that bracket the peak; any
    local maximum outside it counts as a side lobe.
    """
    if pad_factor < 4 or pad_factor & (pad_factor - 1):
        raise ValueError("pad_factor must be a power of two >= 4")
    _, w = win.ordered()
    L = w.size * pad_factor
    mag = np.abs(np.fft.fftshift(np.fft.fft(w, L)))
    peak = int(np.argmax(mag))

    def walk(step: int) -> int:
        i, k = peak, 0
        while k < L // 2:
            j = (i + step) % L
            if mag[j] > mag[i]:
                break
            i, k = j, k + 1
        return k

    left, right = walk(-1), walk(+1)
    width = float(min(left + right, L))
    inside = {(peak + d) % L for d in range(-left, right + 1)}
    prev, nxt = np.roll(mag, 1), np.roll(mag, -1)
    is_max = (mag > prev) & (mag >= nxt)
    side = [mag[i] for i in np.flatnonzero(is_max) if i not in inside]
    if side:
        db = 20.0 * math.log10(max(side) / mag[peak])
    else:
        db = float("-inf")
    return SpectrumMetrics(mag, width, db, pad_factor)


# --- Kaiser alpha table -------------------------------------------------------

# extra qubits p -> (alpha, approximate)
KAISER_ALPHA_TABLE: dict[int, tuple[float, bool]] = {
    0: (0.0, False),
    1: (6.0, False),
    2: (13.0, False),
    3: (25.0, False),
    4: (51.0, False),
    5: (100.0, True),
    6: (100.0, True),
}


def best_alpha(extra_qubits: int) -> float:
    """Tabulated Kaiser alpha for ``extra_qubits`` additional phase qubits."""
    try:
        alpha, approximate = KAISER_ALPHA_TABLE[int(extra_qubits)]
    except KeyError:
        raise ValueError(
            f"no tabulated Kaiser alpha for p={extra_qubits} (table covers 0..6); "
            "choose alpha manually by optimizing the success probability") from None
    if approximate:
        warnings.warn(f"Kaiser alpha for p={extra_qubits} is an approximate guess, not an optimum",
                      stacklevel=2)
    return alpha


# --- state-preparation circuits -----------------------------------------------

def rectangular_window_circuit(n: int) -> list[GateSpec]:
    return [hadamard(q) for q in range(n)]


def cosine_window_circuit(n: int) -> list[GateSpec]:
    """Deterministic preparation of the cosine window on qubits ``0..n-1``.

    Uses one ancilla (qubit ``n``) that starts and ends in ``|0>``. The ancilla
    is prepended as the most significant bit of a ``2N``-point register on
    which ``(|1> + |-1>)/sqrt(2)`` is Fourier transformed into a full cosine
    period. The upper half-period carries the opposite sign; a CNOT from the
    register's sign bit leaves the ancilla in ``|->``, which is then rotated
    back to ``|0>``.
    """
    from .qpe import inverse_qft  # circular import guard

    if n < 1:
        raise ValueError("n must be >= 1")
    anc = n
    reg2 = [anc] + list(range(n))
    gates = [hadamard(anc)]
    gates += [pauli_x(q, [(anc, 1)]) for q in reg2[1:-1]]
    gates.append(pauli_x(reg2[-1]))
    gates += dagger(inverse_qft(n + 1, reg2))
    gates.append(pauli_x(anc, [(0, 1)]))
    gates += [hadamard(anc), pauli_x(anc)]
    return gates

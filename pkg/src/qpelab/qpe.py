"""Windowed quantum phase estimation on the phase-gate testbed.

The phase register occupies qubits ``0..n-1`` (qubit 0 is the most
significant bit) and the eigenstate qubit sits at index ``n`` in ``|1>``, so
``P(phi)`` acts on it as ``exp(2 pi i phi)``.

Two routes compute the same outcome distribution:

* :func:`run_qpe` simulates the circuit gate by gate;
* :func:`emulate_qpe` evaluates the windowed DFT directly.

Success is measured with :func:`success_probability` on an ``m``-bit
distribution, or with :func:`phase_success_probability` on the full
``m + p``-bit readout when extra qubits are discarded.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import statevector as sv
from .statevector import GateSpec, StateVector
from .windows import WindowKind, WindowSpec, WindowState, cosine_window_circuit, make_window

NEG_CLAMP = -1e-15
MAX_CIRCUIT_QUBITS = 16


@dataclass(frozen=True)
class PhaseRegisterSpec:
    m: int
    p: int = 0

    def __post_init__(self) -> None:
        if self.m < 1:
            raise ValueError("m must be >= 1")
        if self.p < 0:
            raise ValueError("p must be >= 0")

    @property
    def n(self) -> int:
        return self.m + self.p


def check_phase(phi: float) -> float:
    phi = float(phi)
    if not 0.0 <= phi < 1.0:
        raise ValueError(f"phase must lie in [0, 1), got {phi}")
    return phi


@dataclass(frozen=True, eq=False)
class OutcomeDistribution:
    num_bits: int
    probs: np.ndarray

    def __post_init__(self) -> None:
        p = np.asarray(self.probs, dtype=float).reshape(-1)
        if p.size != 2**self.num_bits:
            raise ValueError(f"expected {2**self.num_bits} probabilities, got {p.size}")
        if np.any(p < NEG_CLAMP):
            raise ValueError("negative probability in distribution")
        p = np.where(p < 0, 0.0, p)
        if abs(p.sum() - 1.0) > 1e-9:
            raise ValueError(f"probabilities sum to {p.sum()!r}, not 1")
        object.__setattr__(self, "probs", p)

    def __len__(self) -> int:
        return self.probs.size


# --- QFT ------------------------------------------------------------------------

def _swap(a: int, b: int) -> list[GateSpec]:
    return [sv.pauli_x(b, [(a, 1)]), sv.pauli_x(a, [(b, 1)]), sv.pauli_x(b, [(a, 1)])]


def inverse_qft(n: int, qubits: Sequence[int] | None = None) -> list[GateSpec]:
    """Gate list for the inverse QFT, ``|j> -> N^-1/2 sum_k exp(-2 pi i jk/N) |k>``.

    ``qubits[0]`` is the most significant bit of the register (default
    ``range(n)``). The forward transform is ``statevector.dagger`` of this list.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    q = list(range(n)) if qubits is None else list(qubits)
    if len(q) != n:
        raise ValueError("qubit list length must equal n")
    forward: list[GateSpec] = []
    for j in range(n):
        forward.append(sv.hadamard(q[j]))
        for k in range(j + 1, n):
            forward.append(sv.phase_gate(q[j], 1.0 / 2 ** (k - j + 1), [(q[k], 1)]))
    for j in range(n // 2):
        forward += _swap(q[j], q[n - 1 - j])
    return sv.dagger(forward)


# --- circuit driver -------------------------------------------------------------

def controlled_powers(n: int, phi, eigen_qubit: int, signed: bool) -> list[GateSpec]:
    """Controlled ``P(phi)^(2^k)`` with ``k = 0`` on the least significant qubit.

    For signed (two's complement) windows the most significant qubit carries
    weight ``-2^(n-1)``. ``phi`` may be an array, giving batched gates.
    """
    gates = []
    for k in range(n):
        weight = 2**k
        if signed and k == n - 1:
            weight = -weight
        turns = np.mod(weight * np.asarray(phi, dtype=float), 1.0)
        gates.append(sv.phase_gate(eigen_qubit, turns, [(n - 1 - k, 1)]))
    return gates


def run_qpe(phi: float, reg: PhaseRegisterSpec, window: WindowSpec,
            prep: str = "inject") -> OutcomeDistribution:
    """Simulate windowed QPE and return the distribution over all ``n`` bits.

    ``prep`` selects window preparation: ``"inject"`` writes the window
    amplitudes straight into the register; ``"circuit"`` uses the gate-level
    preparation (rectangular and cosine only).
    """
    phi = check_phase(phi)
    n = reg.n
    if window.num_qubits != n:
        raise ValueError(f"window has {window.num_qubits} qubits, phase register has {n}")
    if n > MAX_CIRCUIT_QUBITS:
        raise ValueError(f"n={n} exceeds the statevector cap of {MAX_CIRCUIT_QUBITS}; use emulate_qpe")
    register = list(range(n))
    eigen = n
    if prep == "inject":
        state = sv.new_basis_state(n + 1, 1)
        state = sv.inject_register_state(state, register, make_window(window).amplitudes)
    elif prep == "circuit":
        if window.kind is WindowKind.RECTANGULAR:
            state = sv.new_basis_state(n + 1, 1)
            state = sv.apply_gates(state, [sv.hadamard(q) for q in register])
        elif window.kind is WindowKind.COSINE:
            # cosine preparation borrows an ancilla placed after the eigen qubit
            state = sv.new_basis_state(n + 2, 0b10)
            gates = cosine_window_circuit(n)
            anc_map = {n: n + 1}
            gates = [GateSpec(g.matrix, anc_map.get(g.target, g.target),
                              tuple((anc_map.get(c, c), pol) for c, pol in g.controls)) for g in gates]
            state = sv.apply_gates(state, gates)
        else:
            raise ValueError(f"no preparation circuit for {window.kind.value} windows")
    else:
        raise ValueError(f"unknown prep {prep!r}")
    gates = controlled_powers(n, phi, eigen, window.signed) + inverse_qft(n, register)
    state = sv.apply_gates(state, gates)
    return OutcomeDistribution(n, sv.register_marginal(state, register))


# --- emulator -------------------------------------------------------------------

EMULATOR_BUDGET = 2**21  # complex entries per emulator chunk


def emulator_chunk(n: int) -> int:
    """Phases per emulator batch so one ``(chunk, 2**n)`` array stays small."""
    return max(1, EMULATOR_BUDGET >> n)


def emulate_qpe_batch(phis: np.ndarray, window: WindowState) -> np.ndarray:
    """Outcome probabilities for many phases, shape ``(len(phis), 2**n)``."""
    phis = np.atleast_1d(np.asarray(phis, dtype=float))
    x = window.labels
    N = x.size
    signal = window.amplitudes[None, :] * np.exp(2j * np.pi * np.outer(phis, x))
    amps = np.fft.fft(signal, axis=1) / math.sqrt(N)
    return np.abs(amps) ** 2


def emulate_qpe(phi: float, n: int, window: WindowState) -> OutcomeDistribution:
    """``P(y) = |N^-1/2 sum_x w(x) exp(2 pi i x phi) exp(-2 pi i x y / N)|^2``."""
    phi = check_phase(phi)
    if window.amplitudes.size != 2**n:
        raise ValueError("window length does not match 2**n")
    probs = emulate_qpe_batch(np.array([phi]), window)[0]
    return OutcomeDistribution(n, probs / probs.sum())


# --- bins and success -----------------------------------------------------------

def coalesce_bins(dist: OutcomeDistribution, p: int) -> OutcomeDistribution:
    """Discard the ``p`` least significant readout bits by summing groups of ``2**p`` bins."""
    if not 0 <= p <= dist.num_bits:
        raise ValueError("p must be between 0 and the number of bits")
    m = dist.num_bits - p
    return OutcomeDistribution(m, dist.probs.reshape(2**m, 2**p).sum(axis=1))


def nearest_bins(phi: float, m: int) -> tuple[int, int]:
    lo = math.floor(2**m * phi) % 2**m
    return lo, (lo + 1) % 2**m


def success_probability(dist: OutcomeDistribution, phi: float, m: int) -> float:
    """Total probability of the two nearest ``m``-bit approximations of ``phi``."""
    if dist.num_bits != m:
        raise ValueError(f"distribution has {dist.num_bits} bits, expected {m}")
    lo, hi = nearest_bins(phi, m)
    return float(dist.probs[lo] + dist.probs[hi])


def _accept_offsets(p: int) -> np.ndarray:
    return np.arange(-(2**p) + 1, 2**p + 1)


def phase_success_probability(dist: OutcomeDistribution, phi: float, m: int) -> float:
    """Probability that the ``n``-bit readout lies within ``1/2^m`` of ``phi``.

    Accepts the ``2^(p+1)`` readouts ``y`` with ``y/N - phi`` in
    ``(-1/2^m, 1/2^m]`` (circularly). With ``p = 0`` this is exactly
    :func:`success_probability`; for ``p > 0`` it is periodic in ``phi`` with
    period ``1/2^n``.
    """
    n = dist.num_bits
    p = n - m
    if p < 0:
        raise ValueError("m exceeds the number of readout bits")
    base = math.floor(2**n * phi)
    idx = np.mod(base + _accept_offsets(p), 2**n)
    return float(dist.probs[idx].sum())


def phase_success_batch(probs: np.ndarray, phis: np.ndarray, m: int) -> np.ndarray:
    N = probs.shape[1]
    n = int(round(math.log2(N)))
    base = np.floor(N * np.asarray(phis)).astype(np.int64)
    idx = np.mod(base[:, None] + _accept_offsets(n - m)[None, :], N)
    return np.take_along_axis(probs, idx, axis=1).sum(axis=1)


def period_failure_curve(window: WindowState, m: int, n_points: int,
                         chunk: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Failure probability on the period grid ``phi = i / (n_points * 2^n)``.

    Failure is summed over the rejected readouts rather than taken as
    ``1 - success``, so tails far below machine epsilon keep their relative
    accuracy.
    """
    n = window.num_qubits
    p = n - m
    if p < 0:
        raise ValueError("m exceeds the window size")
    N = 2**n
    L = int(n_points)
    if L < 1:
        raise ValueError("n_points must be >= 1")
    phis = np.arange(L) / (L * N)
    # on [0, 1/N) floor(N phi) = 0, so the accepted readouts are fixed
    reject = np.ones(N, dtype=bool)
    reject[np.mod(_accept_offsets(p), N)] = False
    failure = np.empty(L)
    chunk = chunk or emulator_chunk(n)
    for lo in range(0, L, chunk):
        probs = emulate_qpe_batch(phis[lo:lo + chunk], window)
        failure[lo:lo + chunk] = probs[:, reject].sum(axis=1)
    return phis, failure


def period_success_curve(window: WindowState, m: int, n_points: int) -> tuple[np.ndarray, np.ndarray]:
    """Success probability on the period grid; see :func:`period_failure_curve`."""
    phis, failure = period_failure_curve(window, m, n_points)
    return phis, 1.0 - failure

"""Coherent QSVT phase estimation on the phase-gate testbed.

Bits are extracted least significant first. Step ``k`` (``0 <= k < m``)
writes phase-register qubit ``m-1-k`` using the Hadamard-test block encoding

    A_k = (I - e^{-2 pi i r_k} U^(2^(m-1-k))) / 2,

whose singular value is ``|sin(pi (2^(m-1-k) phi - r_k))|``. ``r_k`` is the
contribution of the ``k`` bits already loaded: the most recently written bit
is rotated out with a half turn, the one before with a quarter turn, and so
on. An exactly representable bit 0 gives ``sigma = 0`` (target ``-1``) and bit
1 gives ``sigma = 1`` (target ``+1``).

Each step prepares its phase qubit in ``|->``, runs the QSVT sequence with
every projector rotation controlled on that qubit, and closes with a
Hadamard. The probability of reading 1 is then exactly
``(1 + Re <0|U_qsvt|0>) / 2``, i.e. ``(1 + qsp_response) / 2``.

Qubit layout: phase register ``0..m-1`` (qubit 0 most significant), block
ancilla ``m``, projector helper ``m+1``, eigenstate qubit ``m+2`` in ``|1>``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import statevector as sv
from .qpe import OutcomeDistribution, check_phase
from .qsp import PhaseFactors
from .statevector import GateSpec

MAX_BITS = 12


@dataclass(frozen=True)
class QsvtStepContext:
    step_index: int
    m: int

    def __post_init__(self) -> None:
        if self.m < 1:
            raise ValueError("m must be >= 1")
        if not 0 <= self.step_index < self.m:
            raise ValueError(f"step_index must lie in [0, {self.m}), got {self.step_index}")

    @property
    def power(self) -> int:
        return 2 ** (self.m - 1 - self.step_index)

    @property
    def target_qubit(self) -> int:
        return self.m - 1 - self.step_index

    @property
    def loaded_bits_register(self) -> list[int]:
        """Already written qubits, most recently written first."""
        return list(range(self.m - self.step_index, self.m))

    @property
    def ancilla(self) -> int:
        return self.m

    @property
    def helper(self) -> int:
        return self.m + 1

    @property
    def eigen_qubit(self) -> int:
        return self.m + 2


@dataclass(frozen=True, eq=False)
class QsvtQpeConfig:
    m: int
    phases: PhaseFactors
    phi: float | np.ndarray

    def __post_init__(self) -> None:
        if not 1 <= self.m <= MAX_BITS:
            raise ValueError(f"m must lie in [1, {MAX_BITS}]")
        if self.phases.degree % 2:
            raise ValueError("QSVT phases must have even degree")
        phis = np.atleast_1d(np.asarray(self.phi, dtype=float))
        for p in phis:
            check_phase(p)


def rotated_out_turns(ctx: QsvtStepContext) -> list[tuple[int, float]]:
    """``(qubit, turns)`` counter-rotations; the newest bit gets half a turn."""
    return [(q, 2.0 ** -(i + 1)) for i, q in enumerate(ctx.loaded_bits_register, start=1)]


def build_w_block(ctx: QsvtStepContext, phi) -> list[GateSpec]:
    """Gate list of the block encoding of ``A_k(phi)`` on the block ancilla.

    ``phi`` may be an array, giving batched controlled-power gates.
    """
    a = ctx.ancilla
    turns = np.mod(ctx.power * np.asarray(phi, dtype=float), 1.0)
    gates = [sv.hadamard(a)]
    gates += [sv.phase_gate(a, -t, [(q, 1)]) for q, t in rotated_out_turns(ctx)]
    gates.append(sv.phase_gate(ctx.eigen_qubit, turns, [(a, 1)]))
    gates += [sv.pauli_z(a), sv.hadamard(a)]
    return gates


def circuit_angles(phases: PhaseFactors) -> np.ndarray:
    """Projector-rotation angles that make the circuit equal the QSP product.

    Alternating ``W`` and ``W^dagger`` turns every interior phase into the
    Wx phase minus ``pi/2``; each ``W, W^dagger`` pair contributes a factor of
    ``-1``, which the first rotation absorbs.
    """
    a = phases.angles.copy()
    a[1:] -= np.pi / 2
    a[0] += np.pi * (phases.degree // 2)
    return a


def projector_rotation(ctx: QsvtStepContext, angle: float,
                       controls: Sequence[tuple[int, int]]) -> list[GateSpec]:
    """``exp(i angle Z_a)`` on the block ancilla, realized on the helper qubit
    between two NOT gates fired by the ancilla-zero sector."""
    flip = sv.pauli_x(ctx.helper, [(ctx.ancilla, 0)])
    rot = GateSpec(sv.rz_matrix(-angle), ctx.helper, tuple(controls), name="Rz")
    return [flip, rot, flip]


def qsvt_sequence(ctx: QsvtStepContext, phases: PhaseFactors, phi,
                  controls: Sequence[tuple[int, int]] = ()) -> list[GateSpec]:
    """``R(a_0) W R(a_1) W^dg R(a_2) ... W^dg R(a_d)`` in application order."""
    angles = circuit_angles(phases)
    w = build_w_block(ctx, phi)
    w_dg = sv.dagger(w)
    d = phases.degree
    gates = projector_rotation(ctx, angles[d], controls)
    for j in range(d, 0, -1):
        gates += w if j % 2 else w_dg
        gates += projector_rotation(ctx, angles[j - 1], controls)
    return gates


def step_gates(ctx: QsvtStepContext, phases: PhaseFactors, phi) -> list[GateSpec]:
    c = ctx.target_qubit
    gates = [sv.hadamard(c), sv.pauli_z(c)]
    gates += qsvt_sequence(ctx, phases, phi, [(c, 1)])
    gates.append(sv.hadamard(c))
    return gates


@dataclass(frozen=True, eq=False)
class QsvtRun:
    """Distributions for a batch of phases plus block-ancilla diagnostics."""

    phis: np.ndarray
    probs: np.ndarray                                 # (B, 2**m)
    ancilla_excitation: np.ndarray                    # (m, B) P(ancilla=1) after each step
    m: int = field(default=0)

    def distribution(self, i: int = 0) -> OutcomeDistribution:
        return OutcomeDistribution(self.m, self.probs[i])


def run_qsvt_batch(m: int, phases: PhaseFactors, phis, chunk: int = 1024) -> QsvtRun:
    """Statevector simulation of the full protocol for every phase in ``phis``."""
    phis = np.atleast_1d(np.asarray(phis, dtype=float))
    QsvtQpeConfig(m, phases, phis)
    nq = m + 3
    probs = np.empty((phis.size, 2**m))
    excite = np.empty((m, phis.size))
    for lo in range(0, phis.size, chunk):
        batch = phis[lo:lo + chunk]
        t = sv.batch_basis_tensor(nq, batch.size, 1)  # eigen qubit (last) in |1>
        for k in range(m):
            ctx = QsvtStepContext(k, m)
            sv.run_gates(t, step_gates(ctx, phases, batch))
            excite[k, lo:lo + chunk] = sv.tensor_marginal(t, [ctx.ancilla])[:, 1]
        probs[lo:lo + chunk] = sv.tensor_marginal(t, list(range(m)))
    return QsvtRun(phis, probs, excite, m)


def run_qsvt_qpe(config: QsvtQpeConfig) -> OutcomeDistribution:
    """Distribution over the ``2**m`` readouts for a single phase."""
    phi = float(np.asarray(config.phi).reshape(-1)[0])
    return run_qsvt_batch(config.m, config.phases, [phi]).distribution(0)


def block_matrix(ctx: QsvtStepContext, gates: Sequence[GateSpec],
                 register_value: int = 0) -> np.ndarray:
    """2x2 action of ``gates`` on the block ancilla with the eigen qubit in
    ``|1>`` and the phase register fixed to ``register_value``."""
    nq = ctx.m + 3
    out = np.empty((2, 2), dtype=complex)
    for col in (0, 1):
        basis = (register_value << 3) | (col << 2) | 1
        t = sv.batch_basis_tensor(nq, 1, basis)
        sv.run_gates(t, gates)
        flat = t.reshape(-1)
        out[0, col] = flat[(register_value << 3) | 1]
        out[1, col] = flat[(register_value << 3) | 4 | 1]
    return out


def block_singular_value(ctx: QsvtStepContext, phi: float, register_value: int = 0) -> float:
    return float(abs(block_matrix(ctx, build_w_block(ctx, phi), register_value)[0, 0]))


def expected_singular_value(ctx: QsvtStepContext, phi: float, register_value: int = 0) -> float:
    """``|sin(pi (2^power phi - r))|`` with ``r`` read from ``register_value``."""
    r = 0.0
    for q, turns in rotated_out_turns(ctx):
        bit = (register_value >> (ctx.m - 1 - q)) & 1
        r += bit * turns
    return abs(math.sin(math.pi * (ctx.power * phi - r)))


def query_cost(method: str, m: int, *, p: int = 0, d: int = 0) -> int:
    """Number of calls to the block encoding ``U_A``.

    ``windowed``: one call per unit of controlled power, ``2^(m+p) - 1``.
    ``qsvt``: ``d`` calls for each of the powers ``2^0 .. 2^(m-1)``.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    if method == "windowed":
        if p < 0:
            raise ValueError("p must be >= 0")
        return 2 ** (m + p) - 1
    if method == "qsvt":
        if d < 0 or d % 2:
            raise ValueError("d must be an even non-negative integer")
        return d * (2**m - 1)
    raise ValueError(f"unknown method {method!r}")

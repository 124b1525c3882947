"""Dense statevector simulation.

Qubit 0 is the most significant bit of every basis index: for an ``n``-qubit
state, qubit ``q`` holds bit ``n - 1 - q`` of the index. Registers passed as
qubit lists follow the same rule, so ``register[0]`` is the most significant
bit of the register value. Every other module relies on this convention.

Internally amplitudes are handled as tensors of shape ``(B, 2, ..., 2)`` where
``B`` is a batch axis. Batching lets a single gate list be applied to many
eigenphases at once; gates may then carry one matrix per batch entry.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

NORM_TOL = 1e-12
UNITARY_TOL = 1e-12

MSB_FIRST = "msb-first"


class StateError(ValueError):
    """Raised when a state does not satisfy an operation's precondition."""


def _check_unitary(matrix: np.ndarray) -> None:
    eye = np.eye(2)
    prod = np.conj(np.swapaxes(matrix, -1, -2)) @ matrix
    if not np.all(np.abs(prod - eye) <= UNITARY_TOL * 10):
        raise ValueError("gate matrix is not unitary")


@dataclass(frozen=True, eq=False)
class GateSpec:
    """A 2x2 unitary on ``target`` with zero or more polarity controls.

    ``controls`` holds ``(qubit, polarity)`` pairs; polarity 1 fires on
    ``|1>`` and polarity 0 on ``|0>``. ``matrix`` may also have shape
    ``(B, 2, 2)`` for a batched gate (one unitary per batch entry).
    """

    matrix: np.ndarray
    target: int
    controls: tuple[tuple[int, int], ...] = ()
    name: str = ""

    def __post_init__(self) -> None:
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape[-2:] != (2, 2) or m.ndim not in (2, 3):
            raise ValueError(f"gate matrix must be 2x2 (or Bx2x2), got {m.shape}")
        _check_unitary(m)
        object.__setattr__(self, "matrix", m)
        ctrl = tuple((int(q), int(pol)) for q, pol in self.controls)
        qubits = [q for q, _ in ctrl]
        if any(pol not in (0, 1) for _, pol in ctrl):
            raise ValueError("control polarity must be 0 or 1")
        if self.target in qubits or len(set(qubits)) != len(qubits):
            raise ValueError("target and control qubits must be distinct")
        object.__setattr__(self, "controls", ctrl)

    @property
    def qubits(self) -> list[int]:
        return [self.target] + [q for q, _ in self.controls]

    @property
    def is_diagonal(self) -> bool:
        return bool(np.all(self.matrix[..., 0, 1] == 0) and np.all(self.matrix[..., 1, 0] == 0))

    def dagger(self) -> "GateSpec":
        return GateSpec(np.conj(np.swapaxes(self.matrix, -1, -2)), self.target, self.controls,
                        self.name + "^dg" if self.name else "")


def dagger(gates: Sequence[GateSpec]) -> list[GateSpec]:
    """Inverse of a gate list: reversed order, each gate conjugate-transposed."""
    return [g.dagger() for g in reversed(gates)]


@dataclass
class StateVector:
    """Normalized amplitudes of ``num_qubits`` qubits, MSB-first indexing."""

    num_qubits: int
    amplitudes: np.ndarray
    qubit_order: str = field(default=MSB_FIRST)

    def __post_init__(self) -> None:
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if amps.size != 2**self.num_qubits:
            raise ValueError(
                f"expected {2**self.num_qubits} amplitudes for {self.num_qubits} qubits, got {amps.size}")
        if abs(np.linalg.norm(amps) - 1.0) > 1e-10:
            raise ValueError("state amplitudes are not normalized")
        self.amplitudes = amps

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def copy(self) -> "StateVector":
        return StateVector(self.num_qubits, self.amplitudes.copy(), self.qubit_order)

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


def new_basis_state(num_qubits: int, bitstring: int) -> StateVector:
    if num_qubits < 1:
        raise ValueError("num_qubits must be >= 1")
    if not 0 <= bitstring < 2**num_qubits:
        raise ValueError(f"bitstring {bitstring} out of range for {num_qubits} qubits")
    amps = np.zeros(2**num_qubits, dtype=complex)
    amps[bitstring] = 1.0
    return StateVector(num_qubits, amps)


# --- tensor kernels -----------------------------------------------------------

def _validate_indices(num_qubits: int, qubits: Iterable[int]) -> None:
    for q in qubits:
        if not 0 <= q < num_qubits:
            raise ValueError(f"qubit index {q} out of range for {num_qubits} qubits")


def apply_to_tensor(tensor: np.ndarray, gate: GateSpec) -> None:
    """Apply ``gate`` in place to a ``(B, 2, ..., 2)`` amplitude tensor.

    Controls are realised by index masking: only the slice where every control
    qubit matches its polarity is touched.
    """
    idx: list = [slice(None)] * tensor.ndim
    for q, pol in gate.controls:
        idx[q + 1] = pol
    sub = tensor[tuple(idx)]
    ax = 1 + gate.target - sum(1 for q, _ in gate.controls if q < gate.target)
    i0: list = [slice(None)] * sub.ndim
    i1: list = [slice(None)] * sub.ndim
    i0[ax], i1[ax] = 0, 1
    i0, i1 = tuple(i0), tuple(i1)

    m = gate.matrix
    if m.ndim == 3:
        if m.shape[0] != tensor.shape[0]:
            raise ValueError("batched gate does not match state batch size")
        shape = (m.shape[0],) + (1,) * (sub.ndim - 2)
        u00, u01, u10, u11 = (m[:, r, c].reshape(shape) for r, c in ((0, 0), (0, 1), (1, 0), (1, 1)))
    else:
        u00, u01, u10, u11 = m[0, 0], m[0, 1], m[1, 0], m[1, 1]

    if gate.is_diagonal:
        if not np.all(u00 == 1):
            sub[i0] *= u00
        sub[i1] *= u11
        return
    a = sub[i0].copy()
    b = sub[i1]
    sub[i0] = u00 * a + u01 * b
    sub[i1] = u10 * a + u11 * b


def run_gates(tensor: np.ndarray, gates: Iterable[GateSpec]) -> np.ndarray:
    for g in gates:
        apply_to_tensor(tensor, g)
    return tensor


def as_tensor(state: StateVector) -> np.ndarray:
    return state.amplitudes.copy().reshape((1,) + (2,) * state.num_qubits)


def batch_basis_tensor(num_qubits: int, batch: int, bitstring: int = 0) -> np.ndarray:
    t = np.zeros((batch, 2**num_qubits), dtype=complex)
    t[:, bitstring] = 1.0
    return t.reshape((batch,) + (2,) * num_qubits)


def apply_gate(state: StateVector, gate: GateSpec) -> StateVector:
    """Return a new state with ``gate`` applied."""
    if gate.matrix.ndim != 2:
        raise ValueError("apply_gate takes a single 2x2 gate; use apply_to_tensor for batches")
    _validate_indices(state.num_qubits, gate.qubits)
    t = as_tensor(state)
    apply_to_tensor(t, gate)
    return StateVector(state.num_qubits, t.reshape(-1), state.qubit_order)


def apply_gates(state: StateVector, gates: Iterable[GateSpec]) -> StateVector:
    t = as_tensor(state)
    for g in gates:
        _validate_indices(state.num_qubits, g.qubits)
        apply_to_tensor(t, g)
    return StateVector(state.num_qubits, t.reshape(-1), state.qubit_order)


def tensor_marginal(tensor: np.ndarray, register: Sequence[int]) -> np.ndarray:
    """Register marginals for every batch entry, shape ``(B, 2**len(register))``."""
    n = tensor.ndim - 1
    probs = np.abs(tensor) ** 2
    others = tuple(q + 1 for q in range(n) if q not in register)
    reduced = probs.sum(axis=others) if others else probs
    # remaining axes are the register qubits in ascending order; reorder to `register`
    remaining = sorted(register)
    perm = [0] + [1 + remaining.index(q) for q in register]
    reduced = np.transpose(reduced, perm)
    return reduced.reshape(tensor.shape[0], -1)


def register_marginal(state: StateVector, register: Sequence[int]) -> np.ndarray:
    """Probability of each register value, marginalizing every other qubit.

    Entry ``y`` is the probability of reading ``y`` on ``register`` (with
    ``register[0]`` as the most significant bit).
    """
    register = list(register)
    if not register:
        raise ValueError("register must not be empty")
    if len(set(register)) != len(register):
        raise ValueError("register qubits must be distinct")
    _validate_indices(state.num_qubits, register)
    return tensor_marginal(as_tensor(state), register)[0]


def inject_register_state(state: StateVector, register: Sequence[int],
                          amplitudes: np.ndarray) -> StateVector:
    """Overwrite a register that is in ``|0...0>`` with the given amplitudes.

    The register must be unentangled and in the all-zero state; the result is
    ``amplitudes`` tensored with the rest of the state. Unnormalized
    amplitudes are rejected rather than rescaled.
    """
    register = list(register)
    if not register or len(set(register)) != len(register):
        raise ValueError("register must be a non-empty list of distinct qubits")
    _validate_indices(state.num_qubits, register)
    amps = np.asarray(amplitudes, dtype=complex).reshape(-1)
    if amps.size != 2 ** len(register):
        raise ValueError(f"need {2**len(register)} amplitudes, got {amps.size}")
    if abs(np.linalg.norm(amps) - 1.0) > NORM_TOL:
        raise ValueError("injected amplitudes are not normalized")

    marg = register_marginal(state, register)
    if abs(marg[0] - 1.0) > NORM_TOL:
        raise StateError("register is not in the all-zero state")

    n = state.num_qubits
    t = state.amplitudes.reshape((2,) * n)
    zero_idx: list = [slice(None)] * n
    for q in register:
        zero_idx[q] = 0
    rest = t[tuple(zero_idx)]  # axes: non-register qubits, ascending
    # build out[reg..., rest...] then move register axes into place
    reg_t = amps.reshape((2,) * len(register))
    out = np.multiply.outer(reg_t, rest)
    others = [q for q in range(n) if q not in register]
    out = np.moveaxis(out, list(range(n)), register + others)
    return StateVector(n, out.reshape(-1), state.qubit_order)


# --- common gates -------------------------------------------------------------

SQRT_HALF = 1.0 / np.sqrt(2.0)
H_MATRIX = np.array([[1, 1], [1, -1]], dtype=complex) * SQRT_HALF
X_MATRIX = np.array([[0, 1], [1, 0]], dtype=complex)
Z_MATRIX = np.array([[1, 0], [0, -1]], dtype=complex)


def phase_matrix(phi: float | np.ndarray) -> np.ndarray:
    """P(phi) = diag(1, exp(2 pi i phi)); phi in turns. Array input gives a batch."""
    phi = np.asarray(phi, dtype=float)
    m = np.zeros(phi.shape + (2, 2), dtype=complex)
    m[..., 0, 0] = 1.0
    m[..., 1, 1] = np.exp(2j * np.pi * phi)
    return m


def rz_matrix(angle: float) -> np.ndarray:
    """exp(i * angle * Z)."""
    return np.diag([np.exp(1j * angle), np.exp(-1j * angle)])


def hadamard(q: int) -> GateSpec:
    return GateSpec(H_MATRIX, q, name="H")


def pauli_x(q: int, controls: Sequence[tuple[int, int]] = ()) -> GateSpec:
    return GateSpec(X_MATRIX, q, tuple(controls), name="X")


def pauli_z(q: int) -> GateSpec:
    return GateSpec(Z_MATRIX, q, name="Z")


def phase_gate(q: int, phi, controls: Sequence[tuple[int, int]] = ()) -> GateSpec:
    return GateSpec(phase_matrix(phi), q, tuple(controls), name="P")

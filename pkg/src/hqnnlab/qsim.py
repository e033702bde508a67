"""Dense statevector simulator for rotation + entangling-gate circuits.

Conventions, fixed once and asserted by the test suite:

* Qubit 0 is the most significant bit of the basis index, so
  ``amplitudes.reshape([2] * n)`` puts qubit ``q`` on axis ``q`` and the
  basis state |10> of a 2-qubit register sits at index 2.
* Rotations are the standard half-angle unitaries
  RX(t) = exp(-i t X / 2), RY(t) = exp(-i t Y / 2), RZ(t) = exp(-i t Z / 2).
* Global phase is never normalised away; callers compare probabilities
  or expectations, which are phase invariant.

Gates act in place on the amplitude array through stride arithmetic
(index masks over the flat array, compiled with numba); no 2^n x 2^n
matrix is ever materialised.  All kernels accept arrays of shape
``(..., 2**n)`` so a batch of statevectors (one per data sample) moves
through a circuit in one pass, and rotation angles may be per-batch-row
arrays, which is how per-sample encoding layers are simulated.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numba
import numpy as np

MAX_QUBITS = 14

ROTATION_KINDS = ("RX", "RY", "RZ")
TWO_QUBIT_KINDS = ("CNOT", "CZ")
ROTATION_GENERATOR = {"RX": "X", "RY": "Y", "RZ": "Z"}


@dataclass(frozen=True)
class GateOp:
    """One gate: a parameterised rotation or a two-qubit entangler."""

    kind: str
    target: int
    control: int | None = None
    angle: float | None = None


@dataclass
class StateVector:
    """Complex amplitudes over the 2**n computational basis states."""

    n_qubits: int
    amplitudes: np.ndarray


def init_state(n_qubits: int, *, ceiling: int = MAX_QUBITS) -> StateVector:
    """All-zeros basis state |0...0> for an ``n_qubits`` register."""
    if not 1 <= n_qubits <= ceiling:
        raise ValueError(f"n_qubits must be in [1, {ceiling}], got {n_qubits}")
    amplitudes = np.zeros(1 << n_qubits, dtype=np.complex128)
    amplitudes[0] = 1.0
    return StateVector(n_qubits, amplitudes)


# --------------------------------------------------------------------------
# compiled stride kernels (rows = batch elements, columns = basis states)
# --------------------------------------------------------------------------

@numba.njit(cache=True)
def _rot_scalar(psi, half, m00, m01, m10, m11):
    for b in range(psi.shape[0]):
        row = psi[b]
        for base in range(0, psi.shape[1], 2 * half):
            for i in range(base, base + half):
                a0 = row[i]
                a1 = row[i + half]
                row[i] = m00 * a0 + m01 * a1
                row[i + half] = m10 * a0 + m11 * a1


@numba.njit(cache=True)
def _rot_batch(psi, half, m00, m01, m10, m11):
    for b in range(psi.shape[0]):
        row = psi[b]
        c00, c01, c10, c11 = m00[b], m01[b], m10[b], m11[b]
        for base in range(0, psi.shape[1], 2 * half):
            for i in range(base, base + half):
                a0 = row[i]
                a1 = row[i + half]
                row[i] = c00 * a0 + c01 * a1
                row[i + half] = c10 * a0 + c11 * a1


@numba.njit(cache=True)
def _cnot(psi, cmask, tmask):
    for b in range(psi.shape[0]):
        row = psi[b]
        for i in range(psi.shape[1]):
            if (i & cmask) != 0 and (i & tmask) == 0:
                j = i | tmask
                tmp = row[i]
                row[i] = row[j]
                row[j] = tmp


@numba.njit(cache=True)
def _cz(psi, cmask, tmask):
    for b in range(psi.shape[0]):
        row = psi[b]
        for i in range(psi.shape[1]):
            if (i & cmask) != 0 and (i & tmask) != 0:
                row[i] = -row[i]


@numba.njit(cache=True)
def _pauli_x(psi, mask):
    for b in range(psi.shape[0]):
        row = psi[b]
        for i in range(psi.shape[1]):
            if (i & mask) == 0:
                j = i | mask
                tmp = row[i]
                row[i] = row[j]
                row[j] = tmp


@numba.njit(cache=True)
def _pauli_y(psi, mask):
    for b in range(psi.shape[0]):
        row = psi[b]
        for i in range(psi.shape[1]):
            if (i & mask) == 0:
                j = i | mask
                a0 = row[i]
                row[i] = -1j * row[j]
                row[j] = 1j * a0


@numba.njit(cache=True)
def _pauli_z(psi, mask):
    for b in range(psi.shape[0]):
        row = psi[b]
        for i in range(psi.shape[1]):
            if (i & mask) != 0:
                row[i] = -row[i]


@numba.njit(cache=True)
def _pauli_x_inner(lam, psi, mask, out):
    for b in range(lam.shape[0]):
        acc = 0j
        for i in range(lam.shape[1]):
            if (i & mask) == 0:
                j = i | mask
                acc += np.conj(lam[b, i]) * psi[b, j] + np.conj(lam[b, j]) * psi[b, i]
        out[b] = acc


@numba.njit(cache=True)
def _pauli_y_inner(lam, psi, mask, out):
    for b in range(lam.shape[0]):
        acc = 0j
        for i in range(lam.shape[1]):
            if (i & mask) == 0:
                j = i | mask
                acc += -1j * np.conj(lam[b, i]) * psi[b, j] + 1j * np.conj(lam[b, j]) * psi[b, i]
        out[b] = acc


@numba.njit(cache=True)
def _pauli_z_inner(lam, psi, mask, out):
    for b in range(lam.shape[0]):
        acc = 0j
        for i in range(lam.shape[1]):
            term = np.conj(lam[b, i]) * psi[b, i]
            acc += -term if (i & mask) != 0 else term
        out[b] = acc


# --------------------------------------------------------------------------
# gate application
# --------------------------------------------------------------------------

def _bit_mask(qubit: int, n: int) -> int:
    # qubit 0 is the most significant bit of the basis index
    return 1 << (n - 1 - qubit)


def rotate(psi: np.ndarray, kind: str, qubit: int, angle, n: int) -> None:
    """Apply RX/RY/RZ on ``qubit`` to ``psi`` of shape (..., 2**n), in place.

    ``angle`` is a scalar or an array matching the leading batch axes of
    ``psi`` (one angle per batch row).
    """
    flat = psi.reshape(-1, 1 << n)
    half = _bit_mask(qubit, n)
    angle = np.asarray(angle, dtype=float)
    if angle.ndim == 0:
        c, s = np.cos(0.5 * angle), np.sin(0.5 * angle)
        if kind == "RX":
            _rot_scalar(flat, half, c + 0j, -1j * s, -1j * s, c + 0j)
        elif kind == "RY":
            _rot_scalar(flat, half, c + 0j, -s + 0j, s + 0j, c + 0j)
        elif kind == "RZ":
            _rot_scalar(flat, half, c - 1j * s, 0j, 0j, c + 1j * s)
        else:
            raise ValueError(f"unknown rotation kind {kind!r}")
    else:
        a = np.broadcast_to(angle, psi.shape[:-1]).reshape(-1)
        c, s = np.cos(0.5 * a), np.sin(0.5 * a)
        zero = np.zeros_like(c, dtype=np.complex128)
        if kind == "RX":
            _rot_batch(flat, half, c + 0j, -1j * s, -1j * s, c + 0j)
        elif kind == "RY":
            _rot_batch(flat, half, c + 0j, -s + 0j, s + 0j, c + 0j)
        elif kind == "RZ":
            _rot_batch(flat, half, c - 1j * s, zero, zero, c + 1j * s)
        else:
            raise ValueError(f"unknown rotation kind {kind!r}")


def entangle(psi: np.ndarray, kind: str, control: int, target: int, n: int) -> None:
    """Apply CNOT or CZ to ``psi`` of shape (..., 2**n), in place."""
    flat = psi.reshape(-1, 1 << n)
    cmask, tmask = _bit_mask(control, n), _bit_mask(target, n)
    if kind == "CNOT":
        _cnot(flat, cmask, tmask)
    elif kind == "CZ":
        _cz(flat, cmask, tmask)
    else:
        raise ValueError(f"unknown entangler kind {kind!r}")


def pauli(psi: np.ndarray, kind: str, qubit: int, n: int) -> None:
    """Apply a bare Pauli X/Y/Z on ``qubit``, in place."""
    flat = psi.reshape(-1, 1 << n)
    mask = _bit_mask(qubit, n)
    if kind == "X":
        _pauli_x(flat, mask)
    elif kind == "Y":
        _pauli_y(flat, mask)
    elif kind == "Z":
        _pauli_z(flat, mask)
    else:
        raise ValueError(f"unknown Pauli kind {kind!r}")


def pauli_inner(lam: np.ndarray, psi: np.ndarray, kind: str, qubit: int, n: int) -> np.ndarray:
    """Per-batch-row <lam| P_qubit |psi> without materialising P|psi>."""
    lam2 = lam.reshape(-1, 1 << n)
    psi2 = psi.reshape(-1, 1 << n)
    out = np.empty(lam2.shape[0], dtype=np.complex128)
    mask = _bit_mask(qubit, n)
    if kind == "X":
        _pauli_x_inner(lam2, psi2, mask, out)
    elif kind == "Y":
        _pauli_y_inner(lam2, psi2, mask, out)
    elif kind == "Z":
        _pauli_z_inner(lam2, psi2, mask, out)
    else:
        raise ValueError(f"unknown Pauli kind {kind!r}")
    return out.reshape(lam.shape[:-1])


def apply_gate(state: StateVector, gate: GateOp) -> StateVector:
    """Apply one gate to ``state`` in place and return it."""
    n = state.n_qubits
    if not 0 <= gate.target < n:
        raise IndexError(f"target {gate.target} outside [0, {n})")
    if gate.kind in ROTATION_KINDS:
        if gate.angle is None or not np.isfinite(gate.angle):
            raise ValueError(f"rotation {gate.kind} needs a finite angle")
        rotate(state.amplitudes, gate.kind, gate.target, gate.angle, n)
    elif gate.kind in TWO_QUBIT_KINDS:
        if gate.control is None:
            raise ValueError(f"{gate.kind} needs a control qubit")
        if not 0 <= gate.control < n:
            raise IndexError(f"control {gate.control} outside [0, {n})")
        if gate.control == gate.target:
            raise ValueError("control and target must differ")
        entangle(state.amplitudes, gate.kind, gate.control, gate.target, n)
    else:
        raise ValueError(f"unknown gate kind {gate.kind!r}")
    return state


# --------------------------------------------------------------------------
# readout
# --------------------------------------------------------------------------

@lru_cache(maxsize=16)
def z_sign_matrix(n: int) -> np.ndarray:
    """(n, 2**n) matrix of (-1)^bit(i, qubit) readout signs."""
    idx = np.arange(1 << n)
    return np.stack([1.0 - 2.0 * ((idx >> (n - 1 - q)) & 1) for q in range(n)])


def probabilities(state: StateVector) -> np.ndarray:
    """Basis-state measurement probabilities |amp_i|^2."""
    return np.abs(state.amplitudes) ** 2


def expectation_z(state: StateVector, qubit: int) -> float:
    """Pauli-Z expectation on one qubit: sum_i (-1)^bit(i, qubit) p_i."""
    n = state.n_qubits
    if not 0 <= qubit < n:
        raise IndexError(f"qubit {qubit} outside [0, {n})")
    return float(probabilities(state) @ z_sign_matrix(n)[qubit])


def all_z_expectations(psi: np.ndarray, n: int) -> np.ndarray:
    """Per-qubit Z expectations for ``psi`` of shape (..., 2**n) -> (..., n)."""
    p = np.abs(psi) ** 2
    return p @ z_sign_matrix(n).T

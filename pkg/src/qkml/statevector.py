"""Dense statevector simulator for small qubit registers.

Basis convention: computational basis state ``|b_{n-1} ... b_1 b_0>`` is
stored at amplitude index ``sum_q b_q * 2**q``, i.e. qubit 0 is the least
significant bit of the index.  Gates act by unitary application on a
complex128 amplitude vector; every operation returns a new state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from . import accel

MAX_QUBITS = 20

H = "h"
RX = "rx"
RY = "ry"
RZ = "rz"
CNOT = "cnot"
CZ = "cz"

_ROTATIONS = (RX, RY, RZ)
_TWO_QUBIT = (CNOT, CZ)
_KINDS = (H,) + _ROTATIONS + _TWO_QUBIT

_INV_SQRT2 = 1.0 / math.sqrt(2.0)


@dataclass(frozen=True)
class Gate:
    """One gate instance: kind, target qubit(s) and optional angle.

    ``targets`` holds (qubit,) for single-qubit kinds and
    (control, target) for cnot / (qubit, qubit) for cz.  Rotation kinds
    carry an angle in radians; the others must not.
    """

    kind: str
    targets: tuple
    angle: Optional[float] = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        targets = tuple(int(t) for t in self.targets)
        object.__setattr__(self, "targets", targets)
        want = 2 if self.kind in _TWO_QUBIT else 1
        if len(targets) != want:
            raise ValueError(
                f"{self.kind} gate takes {want} qubit(s), got {len(targets)}"
            )
        if len(set(targets)) != len(targets):
            raise ValueError(f"{self.kind} gate targets must be distinct: {targets}")
        if any(t < 0 for t in targets):
            raise ValueError(f"negative qubit index in {targets}")
        if self.kind in _ROTATIONS:
            if self.angle is None:
                raise ValueError(f"{self.kind} gate requires an angle")
            angle = float(self.angle)
            if not math.isfinite(angle):
                raise ValueError(f"{self.kind} angle must be finite, got {angle!r}")
            object.__setattr__(self, "angle", angle)
        elif self.angle is not None:
            raise ValueError(f"{self.kind} gate takes no angle")


def h(qubit: int) -> Gate:
    return Gate(H, (qubit,))


def rx(angle: float, qubit: int) -> Gate:
    return Gate(RX, (qubit,), angle)


def ry(angle: float, qubit: int) -> Gate:
    return Gate(RY, (qubit,), angle)


def rz(angle: float, qubit: int) -> Gate:
    return Gate(RZ, (qubit,), angle)


def cnot(control: int, target: int) -> Gate:
    return Gate(CNOT, (control, target))


def cz(a: int, b: int) -> Gate:
    return Gate(CZ, (a, b))


@dataclass(frozen=True)
class Circuit:
    """Ordered gate list over a fixed-width register."""

    num_qubits: int
    gates: tuple = ()

    def __post_init__(self):
        n = int(self.num_qubits)
        if not 1 <= n <= MAX_QUBITS:
            raise ValueError(f"num_qubits must be in [1, {MAX_QUBITS}], got {n}")
        object.__setattr__(self, "num_qubits", n)
        gates = tuple(self.gates)
        for g in gates:
            if not isinstance(g, Gate):
                raise TypeError(f"expected Gate, got {type(g).__name__}")
            if max(g.targets) >= n:
                raise ValueError(
                    f"gate {g.kind} targets {g.targets} out of range for "
                    f"{n} qubit(s)"
                )
        object.__setattr__(self, "gates", gates)


@dataclass(frozen=True)
class StateVector:
    """Immutable register state: 2**num_qubits complex128 amplitudes."""

    num_qubits: int
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=np.complex128)
        if amps.shape != (1 << self.num_qubits,):
            raise ValueError(
                f"expected {1 << self.num_qubits} amplitudes for "
                f"{self.num_qubits} qubit(s), got shape {amps.shape}"
            )
        amps = amps.copy()
        amps.flags.writeable = False
        object.__setattr__(self, "amplitudes", amps)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


def init_zero(num_qubits: int) -> StateVector:
    """Prepare |0...0>."""
    if not 1 <= num_qubits <= MAX_QUBITS:
        raise ValueError(f"num_qubits must be in [1, {MAX_QUBITS}], got {num_qubits}")
    amps = np.zeros(1 << num_qubits, dtype=np.complex128)
    amps[0] = 1.0
    return StateVector(num_qubits, amps)


def single_qubit_matrix(gate: Gate) -> np.ndarray:
    """2x2 unitary for a single-qubit gate."""
    if gate.kind == H:
        return np.array(
            [[_INV_SQRT2, _INV_SQRT2], [_INV_SQRT2, -_INV_SQRT2]], dtype=np.complex128
        )
    half = gate.angle / 2.0
    c = math.cos(half)
    s = math.sin(half)
    if gate.kind == RX:
        return np.array([[c, -1j * s], [-1j * s, c]], dtype=np.complex128)
    if gate.kind == RY:
        return np.array([[c, -s], [s, c]], dtype=np.complex128)
    if gate.kind == RZ:
        return np.array(
            [[complex(c, -s), 0.0], [0.0, complex(c, s)]], dtype=np.complex128
        )
    raise ValueError(f"{gate.kind} has no single-qubit matrix")


def _apply_gate_raw(amps: np.ndarray, gate: Gate) -> np.ndarray:
    if gate.kind == CNOT:
        return accel.apply_cnot(amps, gate.targets[0], gate.targets[1])
    if gate.kind == CZ:
        return accel.apply_cz(amps, gate.targets[0], gate.targets[1])
    return accel.apply_single_qubit(amps, gate.targets[0], single_qubit_matrix(gate))


def apply_gate(state: StateVector, gate: Gate) -> StateVector:
    """Apply one gate, returning the new state."""
    if max(gate.targets) >= state.num_qubits:
        raise ValueError(
            f"gate {gate.kind} targets {gate.targets} out of range for "
            f"{state.num_qubits} qubit(s)"
        )
    return StateVector(state.num_qubits, _apply_gate_raw(state.amplitudes, gate))


def run_circuit(circuit: Circuit, state: Optional[StateVector] = None) -> StateVector:
    """Apply every gate of the circuit in order, starting from |0...0>
    when no initial state is given."""
    if state is None:
        state = init_zero(circuit.num_qubits)
    elif state.num_qubits != circuit.num_qubits:
        raise ValueError(
            f"circuit acts on {circuit.num_qubits} qubit(s) but state has "
            f"{state.num_qubits}"
        )
    amps = state.amplitudes
    for gate in circuit.gates:
        amps = _apply_gate_raw(amps, gate)
    return StateVector(circuit.num_qubits, amps)


def inner_product(a: StateVector, b: StateVector) -> complex:
    """<a|b>; raises on register width mismatch."""
    if a.num_qubits != b.num_qubits:
        raise ValueError(
            f"inner product of {a.num_qubits}- and {b.num_qubits}-qubit states"
        )
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def z_expectation(state: StateVector, qubit: int) -> float:
    """<Z_qubit>: +1 weight on basis states with the bit clear, -1 set."""
    if not 0 <= qubit < state.num_qubits:
        raise ValueError(f"qubit {qubit} out of range for {state.num_qubits}")
    idx = np.arange(state.amplitudes.shape[0])
    probs = np.abs(state.amplitudes) ** 2
    signs = 1.0 - 2.0 * ((idx >> qubit) & 1)
    return float(np.dot(signs, probs))


def statevector_matrix(states: Iterable[StateVector]) -> np.ndarray:
    """Stack states into an (n, 2**q) complex matrix (for kernel assembly)."""
    rows = [s.amplitudes for s in states]
    if not rows:
        raise ValueError("no states given")
    widths = {r.shape[0] for r in rows}
    if len(widths) != 1:
        raise ValueError("states have mixed register widths")
    return np.vstack(rows)

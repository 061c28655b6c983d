"""Data-encoding circuits mapping feature vectors to register states.

Two families:

* ``angle_y`` -- one RY(x_i) per qubit per repetition.  The induced
  fidelity kernel factorises as prod_i cos^2((x_i - x'_i) / 2).
* ``zz`` -- per repetition: H on every qubit, RZ(x_i) on qubit i, then
  for each entangled pair (i, j): CNOT(i, j), RZ((pi - x_i) * (pi - x_j))
  on j, CNOT(i, j).

Entanglement patterns: ``linear`` pairs (i, i+1); ``ring`` additionally
closes (n-1, 0) when n >= 3 (for n <= 2 the closing pair would duplicate
the only linear pair).  Inputs are expected pre-scaled to [0, pi] by the
dataset pipeline, but any finite angles are accepted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .statevector import Circuit, StateVector, cnot, h, run_circuit, ry, rz

ANGLE_Y = "angle_y"
ZZ = "zz"
_KINDS = (ANGLE_Y, ZZ)

LINEAR = "linear"
RING = "ring"
_PATTERNS = (LINEAR, RING)

_DEFAULT_REPS = {ANGLE_Y: 1, ZZ: 2}


@dataclass(frozen=True)
class FeatureMapSpec:
    """Feature-map family, register width, depth and entanglement layout.

    ``repetitions=None`` selects the family default (1 for angle_y,
    2 for zz).  ``entanglement`` only matters for the zz family.
    """

    kind: str
    num_qubits: int
    repetitions: Optional[int] = None
    entanglement: str = LINEAR

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown feature map kind {self.kind!r}")
        n = int(self.num_qubits)
        if n < 1:
            raise ValueError(f"num_qubits must be >= 1, got {n}")
        object.__setattr__(self, "num_qubits", n)
        reps = self.repetitions
        if reps is None:
            reps = _DEFAULT_REPS[self.kind]
        reps = int(reps)
        if reps < 1:
            raise ValueError(f"repetitions must be >= 1, got {reps}")
        object.__setattr__(self, "repetitions", reps)
        if self.entanglement not in _PATTERNS:
            raise ValueError(f"unknown entanglement pattern {self.entanglement!r}")


def entangled_pairs(num_qubits: int, pattern: str) -> list:
    """Ordered (control, target) pairs for the given pattern."""
    pairs = [(i, i + 1) for i in range(num_qubits - 1)]
    if pattern == RING and num_qubits >= 3:
        pairs.append((num_qubits - 1, 0))
    return pairs


def _check_features(spec: FeatureMapSpec, x: Sequence) -> np.ndarray:
    vec = np.asarray(x, dtype=np.float64)
    if vec.ndim != 1 or vec.shape[0] != spec.num_qubits:
        raise ValueError(
            f"feature vector must have length {spec.num_qubits}, "
            f"got shape {vec.shape}"
        )
    if not np.all(np.isfinite(vec)):
        raise ValueError("feature vector contains non-finite values")
    return vec


def build_feature_circuit(spec: FeatureMapSpec, x: Sequence) -> Circuit:
    """Encoding circuit for one feature vector."""
    vec = _check_features(spec, x)
    gates = []
    if spec.kind == ANGLE_Y:
        for _ in range(spec.repetitions):
            for q in range(spec.num_qubits):
                gates.append(ry(vec[q], q))
    else:
        pairs = entangled_pairs(spec.num_qubits, spec.entanglement)
        for _ in range(spec.repetitions):
            for q in range(spec.num_qubits):
                gates.append(h(q))
            for q in range(spec.num_qubits):
                gates.append(rz(vec[q], q))
            for i, j in pairs:
                gates.append(cnot(i, j))
                gates.append(rz((math.pi - vec[i]) * (math.pi - vec[j]), j))
                gates.append(cnot(i, j))
    return Circuit(spec.num_qubits, tuple(gates))


def embed(spec: FeatureMapSpec, x: Sequence) -> StateVector:
    """Run the encoding circuit on |0...0>."""
    return run_circuit(build_feature_circuit(spec, x))

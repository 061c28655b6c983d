"""Shared test oracles.

Everything here is an independent re-derivation used to cross-check the
package: full-matrix circuit simulation via Kronecker products, the
closed-form product kernel for per-qubit RY embeddings, and an
exhaustive feasible-grid search of the SVM dual.
"""

import numpy as np

from qkml import statevector as sv

_H = np.array([[1.0, 1.0], [1.0, -1.0]], dtype=np.complex128) / np.sqrt(2.0)
_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=np.complex128)
_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=np.complex128)
_P0 = np.array([[1.0, 0.0], [0.0, 0.0]], dtype=np.complex128)
_P1 = np.array([[0.0, 0.0], [0.0, 1.0]], dtype=np.complex128)


def _embed_1q(u: np.ndarray, qubit: int, n: int) -> np.ndarray:
    """Lift a 2x2 operator to 2^n x 2^n; qubit 0 is the LSB of the index."""
    full = np.eye(2 ** (n - 1 - qubit), dtype=np.complex128)
    full = np.kron(full, u)
    return np.kron(full, np.eye(2**qubit, dtype=np.complex128))


def _rot(kind: str, theta: float) -> np.ndarray:
    c, s = np.cos(theta / 2.0), np.sin(theta / 2.0)
    if kind == "rx":
        return np.array([[c, -1j * s], [-1j * s, c]], dtype=np.complex128)
    if kind == "ry":
        return np.array([[c, -s], [s, c]], dtype=np.complex128)
    if kind == "rz":
        return np.array(
            [[np.exp(-0.5j * theta), 0.0], [0.0, np.exp(0.5j * theta)]],
            dtype=np.complex128,
        )
    raise ValueError(kind)


def gate_unitary(gate, n: int) -> np.ndarray:
    """Explicit 2^n x 2^n matrix for one gate."""
    if gate.kind == "h":
        return _embed_1q(_H, gate.targets[0], n)
    if gate.kind in ("rx", "ry", "rz"):
        return _embed_1q(_rot(gate.kind, gate.angle), gate.targets[0], n)
    control, target = gate.targets
    flip = _X if gate.kind == "cnot" else _Z
    return _embed_1q(_P0, control, n) + _embed_1q(_P1, control, n) @ _embed_1q(
        flip, target, n
    )


def circuit_unitary(circuit) -> np.ndarray:
    """Product of the per-gate matrices, in application order."""
    n = circuit.num_qubits
    full = np.eye(2**n, dtype=np.complex128)
    for gate in circuit.gates:
        full = gate_unitary(gate, n) @ full
    return full


def brute_run(circuit, amplitudes=None) -> np.ndarray:
    """Simulate by explicit matrix-vector products."""
    if amplitudes is None:
        amplitudes = np.zeros(2**circuit.num_qubits, dtype=np.complex128)
        amplitudes[0] = 1.0
    return circuit_unitary(circuit) @ amplitudes


def random_circuit(rng, num_qubits: int, n_gates: int):
    """Mixed random circuit over the full gate set."""
    gates = []
    kinds = ["h", "rx", "ry", "rz", "cnot", "cz"]
    n_kinds = len(kinds) if num_qubits > 1 else 4  # 2-qubit gates need 2 qubits
    for _ in range(n_gates):
        kind = kinds[int(rng.integers(n_kinds))]
        if kind == "h":
            gates.append(sv.h(int(rng.integers(num_qubits))))
        elif kind in ("rx", "ry", "rz"):
            ctor = {"rx": sv.rx, "ry": sv.ry, "rz": sv.rz}[kind]
            gates.append(
                ctor(float(rng.uniform(0, 2 * np.pi)), int(rng.integers(num_qubits)))
            )
        else:
            a, b = rng.choice(num_qubits, size=2, replace=False)
            ctor = sv.cnot if kind == "cnot" else sv.cz
            gates.append(ctor(int(a), int(b)))
    return sv.Circuit(num_qubits, tuple(gates))


def angle_y_kernel(x, x_prime) -> float:
    """Closed form for the per-qubit RY embedding kernel."""
    x = np.asarray(x, dtype=np.float64)
    x_prime = np.asarray(x_prime, dtype=np.float64)
    return float(np.prod(np.cos((x - x_prime) / 2.0) ** 2))


def best_root_split(x, y, min_leaf: int = 1):
    """Exhaustive enumeration of (feature, midpoint) split candidates.

    Scores use the same arithmetic shape as the implementation under
    test so exact-tie cases resolve identically: ascending feature, then
    ascending threshold, first strict improvement wins.  Returns
    (score, feature, threshold) or None when nothing is admissible.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    n = y.shape[0]
    best = None
    for f in range(x.shape[1]):
        vals = np.unique(x[:, f])
        for lo_v, hi_v in zip(vals[:-1], vals[1:]):
            thr = (lo_v + hi_v) / 2.0
            mask = x[:, f] <= thr
            nl = int(mask.sum())
            nr = n - nl
            if nl < min_leaf or nr < min_leaf:
                continue
            lo = float(y[mask].sum())
            lz = float(nl) - lo
            ro = float(y[~mask].sum())
            rz = float(nr) - ro
            pl, pr = float(nl), float(nr)
            score = (
                pl * (1.0 - (lz * lz + lo * lo) / (pl * pl))
                + pr * (1.0 - (rz * rz + ro * ro) / (pr * pr))
            ) / float(n)
            if best is None or score < best[0]:
                best = (score, f, thr)
    return best


def grid_oracle_best(kmat, y_signed, c: float, step: float = 0.01) -> float:
    """Maximum dual objective over the feasible grid.

    Enumerates the first n-1 alphas on the step grid and solves the last
    one from the balance constraint sum(alpha_i * y_i) = 0 in integer
    grid units, so only exactly feasible points are scored.
    """
    y = np.asarray(y_signed, dtype=np.int64)
    n = y.shape[0]
    m = int(round(c / step)) + 1
    q = np.asarray(kmat, dtype=np.float64) * np.outer(y, y)
    shape = (m,) * (n - 1)
    total = m ** (n - 1)
    best = -np.inf
    chunk = 200_000
    for lo in range(0, total, chunk):
        flat = np.arange(lo, min(lo + chunk, total))
        digits = np.stack(np.unravel_index(flat, shape), axis=1)
        balance = digits @ y[:-1]
        last = -balance * y[-1]
        ok = (last >= 0) & (last < m)
        if not ok.any():
            continue
        units = np.concatenate([digits[ok], last[ok, None]], axis=1)
        alphas = units * step
        obj = alphas.sum(axis=1) - 0.5 * np.einsum(
            "bi,ij,bj->b", alphas, q, alphas
        )
        best = max(best, float(obj.max()))
    return best

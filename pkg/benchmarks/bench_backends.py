#!/usr/bin/env python3
"""Throughput comparison of the numba and numpy backends.

Each case times one hot kernel through its public entry point:

* gates  -- random 60-gate circuit at 12 qubits (statevector.run_circuit)
* gram   -- 160x160 fidelity matrix over 6 features (qkernel.gram_matrix)
* smo    -- dual solve on a 240-row rbf kernel (svm.train_svm)
* splits -- depth-6 tree on 20000x6 rows (trees.train_tree)

The backend is frozen when qkml.accel is imported, so every measurement
runs in a fresh subprocess with QKML_BACKEND set; the parent process
only aggregates.  The first call inside each worker is an untimed
warm-up, which also pays the one-off jit compile on the numba side.
"""

import argparse
import json
import os
import subprocess
import sys
import time

CASES = ("gates", "gram", "smo", "splits")


def _timed(fn, repeats):
    fn()  # warm-up: jit compile + caches
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def _bench_gates(repeats):
    import numpy as np

    from qkml import statevector as sv

    rng = np.random.default_rng(0)
    n = 12
    gates = []
    for _ in range(60):
        q = int(rng.integers(n))
        kind = int(rng.integers(4))
        if kind == 0:
            gates.append(sv.h(q))
        elif kind == 1:
            gates.append(sv.ry(float(rng.uniform(0, 2 * np.pi)), q))
        elif kind == 2:
            gates.append(sv.rz(float(rng.uniform(0, 2 * np.pi)), q))
        else:
            other = int(rng.integers(n - 1))
            other += other >= q  # distinct second qubit
            gates.append(sv.cnot(q, other))
    circuit = sv.Circuit(n, tuple(gates))
    return _timed(lambda: sv.run_circuit(circuit), repeats)


def _bench_gram(repeats):
    import numpy as np

    from qkml import qkernel
    from qkml.feature_maps import ANGLE_Y, FeatureMapSpec

    rng = np.random.default_rng(1)
    rows = rng.uniform(0.0, np.pi, size=(160, 6))
    spec = FeatureMapSpec(ANGLE_Y, 6)
    return _timed(lambda: qkernel.gram_matrix(spec, rows), repeats)


def _bench_smo(repeats):
    import numpy as np

    from qkml import svm

    rng = np.random.default_rng(2)
    x = rng.normal(size=(240, 4))
    y = (x[:, 0] + 0.5 * x[:, 1] > 0).astype(np.int64)
    kmat = svm.rbf_kernel(x, x, 0.5)
    cfg = svm.SvmConfig(c=1.0, tolerance=1e-3, max_passes=10)
    return _timed(lambda: svm.train_svm(kmat, y, cfg, seed=0), repeats)


def _bench_splits(repeats):
    import numpy as np

    from qkml import trees

    rng = np.random.default_rng(3)
    x = rng.normal(size=(20000, 6))
    noise = rng.random(20000) < 0.2
    y = ((x[:, 0] + 0.3 * x[:, 1] > 0) ^ noise).astype(np.int64)
    cfg = trees.TreeConfig(max_depth=6)
    return _timed(lambda: trees.train_tree(x, y, cfg), repeats)


_RUNNERS = {
    "gates": _bench_gates,
    "gram": _bench_gram,
    "smo": _bench_smo,
    "splits": _bench_splits,
}


def _run_worker(case, repeats):
    from qkml import accel

    seconds = _RUNNERS[case](repeats)
    print(json.dumps({"case": case, "backend": accel.active_backend(), "seconds": seconds}))


def _spawn(case, backend, repeats):
    env = dict(os.environ, QKML_BACKEND=backend)
    proc = subprocess.run(
        [sys.executable, os.path.abspath(__file__), "--worker", case, "--repeats", str(repeats)],
        capture_output=True,
        text=True,
        env=env,
    )
    if proc.returncode != 0:
        sys.stderr.write(proc.stderr)
        return None
    doc = json.loads(proc.stdout.strip().splitlines()[-1])
    if doc["backend"] != backend:
        raise RuntimeError(f"worker ran {doc['backend']!r}, wanted {backend!r}")
    return doc["seconds"]


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--cases", nargs="*", default=list(CASES), choices=CASES)
    parser.add_argument("--repeats", type=int, default=5, help="timed runs per case (best wins)")
    parser.add_argument("--worker", default=None, help=argparse.SUPPRESS)
    args = parser.parse_args(argv)

    if args.worker is not None:
        _run_worker(args.worker, args.repeats)
        return 0

    print(f"{'case':8s} {'numba':>12s} {'numpy':>12s} {'speedup':>9s}")
    for case in args.cases:
        jit = _spawn(case, "numba", args.repeats)
        plain = _spawn(case, "numpy", args.repeats)
        jit_s = f"{jit:.4f} s" if jit is not None else "failed"
        plain_s = f"{plain:.4f} s" if plain is not None else "failed"
        ratio = f"{plain / jit:8.1f}x" if jit and plain else "      --"
        print(f"{case:8s} {jit_s:>12s} {plain_s:>12s} {ratio}")
    return 0


if __name__ == "__main__":
    sys.exit(main())

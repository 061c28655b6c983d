"""Fidelity kernel: k(x, x') = |<phi(x')|phi(x)>|^2 over feature-map states.

Embeddings are computed once per data row (optionally across a thread
pool; rows are written into preallocated slots so the result does not
depend on thread count), then all pairwise overlaps are evaluated in one
backend call.  Entries are clamped to [0, 1]; drift beyond CLAMP_TOL
outside that interval indicates a broken embedding and raises.

Gram matrices can be exported to a small binary container (magic
``QKGM``) with a JSON sidecar carrying the feature-map description and
content hashes, so a cached kernel can be verified before reuse.
"""

from __future__ import annotations

import hashlib
import json
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import accel
from .artifacts import write_bytes_atomic, write_text_atomic
from .feature_maps import FeatureMapSpec, embed

CLAMP_TOL = 1e-9
PSD_TOL = -1e-8

_MAGIC = b"QKGM"
_VERSION = 1


@dataclass(frozen=True)
class GramMatrix:
    """Symmetric fidelity matrix over one set of rows."""

    entries: np.ndarray = field(repr=False)

    def __post_init__(self):
        m = np.asarray(self.entries, dtype=np.float64)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"gram matrix must be square, got shape {m.shape}")
        m = m.copy()
        m.flags.writeable = False
        object.__setattr__(self, "entries", m)

    @property
    def size(self) -> int:
        return self.entries.shape[0]


def kernel_entry(spec: FeatureMapSpec, x: Sequence, x_prime: Sequence) -> float:
    """Single fidelity value between two feature vectors."""
    a = embed(spec, x).amplitudes
    b = embed(spec, x_prime).amplitudes
    overlap = np.vdot(b, a)
    return float(_clamp_unit(np.array([[abs(overlap) ** 2]]))[0, 0])


def _clamp_unit(values: np.ndarray) -> np.ndarray:
    """Clamp to [0, 1]; error out when anything drifts past CLAMP_TOL."""
    low = float(values.min())
    high = float(values.max())
    if low < -CLAMP_TOL or high > 1.0 + CLAMP_TOL:
        raise ValueError(
            f"fidelity outside [0, 1] beyond tolerance {CLAMP_TOL}: "
            f"range [{low}, {high}]"
        )
    return np.clip(values, 0.0, 1.0)


def embedding_matrix(
    spec: FeatureMapSpec, rows: np.ndarray, threads: int = 1
) -> np.ndarray:
    """Embed every row once; returns an (n, 2**q) complex matrix.

    With threads > 1 rows are chunked over a thread pool; each worker
    writes its own slice, so output is identical for any thread count.
    """
    rows = np.asarray(rows, dtype=np.float64)
    if rows.ndim != 2:
        raise ValueError(f"expected a 2-d row matrix, got shape {rows.shape}")
    n = rows.shape[0]
    if n == 0:
        raise ValueError("no rows to embed")
    out = np.empty((n, 1 << spec.num_qubits), dtype=np.complex128)
    threads = max(1, int(threads))
    if threads == 1 or n < 2:
        for i in range(n):
            out[i] = embed(spec, rows[i]).amplitudes
        return out

    def fill(lo: int, hi: int) -> None:
        for i in range(lo, hi):
            out[i] = embed(spec, rows[i]).amplitudes

    step = (n + threads - 1) // threads
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futures = [
            pool.submit(fill, lo, min(lo + step, n)) for lo in range(0, n, step)
        ]
        for f in futures:
            f.result()
    return out


def gram_matrix(
    spec: FeatureMapSpec, rows: np.ndarray, threads: int = 1
) -> GramMatrix:
    """All pairwise fidelities for one row set."""
    states = embedding_matrix(spec, rows, threads=threads)
    entries = _clamp_unit(accel.fidelity_gram(states))
    # Self-fidelity is exactly 1; drop the float noise the backends leave.
    np.fill_diagonal(entries, 1.0)
    return GramMatrix(entries)


def cross_kernel(
    spec: FeatureMapSpec,
    rows_test: np.ndarray,
    rows_train: np.ndarray,
    threads: int = 1,
) -> np.ndarray:
    """Fidelities of every test row against every train row."""
    a = embedding_matrix(spec, np.asarray(rows_test), threads=threads)
    b = embedding_matrix(spec, np.asarray(rows_train), threads=threads)
    if a.shape[1] != b.shape[1]:
        raise ValueError("test and train rows use different register widths")
    return _clamp_unit(accel.fidelity_cross(a, b))


def check_psd(gram: GramMatrix) -> float:
    """Smallest eigenvalue (symmetric matrices only)."""
    return float(np.linalg.eigvalsh(gram.entries)[0])


def matrix_sha256(rows: np.ndarray) -> str:
    """Content hash of a float64 row-major matrix."""
    arr = np.ascontiguousarray(np.asarray(rows, dtype=np.float64))
    digest = hashlib.sha256()
    digest.update(str(arr.shape).encode())
    digest.update(arr.tobytes())
    return digest.hexdigest()


def _file_sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _sidecar_path(path: Path) -> Path:
    return path.with_name(path.name + ".meta")


def save_gram(
    path,
    gram: GramMatrix,
    spec: FeatureMapSpec,
    input_sha256: Optional[str] = None,
) -> Path:
    """Write the binary container and its JSON sidecar.

    Layout: magic ``QKGM``, little-endian uint32 version (1), uint64 row
    count n, then n*n float64 entries row-major.  The sidecar records the
    feature-map fields, the hash of the source row matrix (when given)
    and the hash of the container file itself.
    """
    path = Path(path)
    blob = (
        _MAGIC
        + struct.pack("<I", _VERSION)
        + struct.pack("<Q", gram.size)
        + gram.entries.astype("<f8").tobytes(order="C")
    )
    write_bytes_atomic(path, blob)
    meta = {
        "format": _MAGIC.decode(),
        "version": _VERSION,
        "n": gram.size,
        "feature_map": {
            "kind": spec.kind,
            "num_qubits": spec.num_qubits,
            "repetitions": spec.repetitions,
            "entanglement": spec.entanglement,
        },
        "input_sha256": input_sha256,
        "file_sha256": hashlib.sha256(blob).hexdigest(),
    }
    sidecar = _sidecar_path(path)
    write_text_atomic(sidecar, json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return sidecar


def load_gram(path) -> GramMatrix:
    """Read a QKGM container (no sidecar verification)."""
    path = Path(path)
    raw = path.read_bytes()
    if raw[:4] != _MAGIC:
        raise ValueError(f"{path}: not a QKGM file (bad magic {raw[:4]!r})")
    (version,) = struct.unpack_from("<I", raw, 4)
    if version != _VERSION:
        raise ValueError(f"{path}: unsupported QKGM version {version}")
    (n,) = struct.unpack_from("<Q", raw, 8)
    expected = 16 + 8 * n * n
    if len(raw) != expected:
        raise ValueError(
            f"{path}: truncated or padded QKGM file "
            f"({len(raw)} bytes, expected {expected})"
        )
    entries = np.frombuffer(raw, dtype="<f8", offset=16).reshape(n, n)
    return GramMatrix(entries)


def verify_gram(path) -> dict:
    """Check the container against its sidecar hashes; returns metadata.

    Raises ValueError on a missing sidecar, hash mismatch or malformed
    container, so any tampered byte is caught before the matrix is used.
    """
    path = Path(path)
    sidecar = _sidecar_path(path)
    if not sidecar.exists():
        raise ValueError(f"{path}: missing sidecar {sidecar.name}")
    meta = json.loads(sidecar.read_text())
    actual = _file_sha256(path)
    if actual != meta.get("file_sha256"):
        raise ValueError(
            f"{path}: hash mismatch (sidecar {meta.get('file_sha256')}, "
            f"file {actual})"
        )
    gram = load_gram(path)
    if gram.size != meta.get("n"):
        raise ValueError(
            f"{path}: sidecar row count {meta.get('n')} != container {gram.size}"
        )
    return meta

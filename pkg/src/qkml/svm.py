"""Binary SVM trained by simplified two-multiplier SMO.

Labels enter as {0, 1} and are mapped to {-1, +1} internally.  Training
runs on a precomputed kernel matrix; ``linear`` and ``rbf`` kernels are
provided for classical baselines and simply build that matrix from the
feature rows first.  The decision value for a row with kernel entries
k_i against the training set is

    sum_i alpha_i * y_i * k_i + bias

and ties at exactly 0 resolve to class 1.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from . import accel
from .qkernel import GramMatrix, matrix_sha256

PRECOMPUTED = "precomputed"
LINEAR = "linear"
RBF = "rbf"
_KERNELS = (PRECOMPUTED, LINEAR, RBF)

LABEL_MAP = {0: -1, 1: 1}

# Warn (and proceed) when the training matrix dips below this eigenvalue.
PSD_WARN_TOL = -1e-6
# Eigenvalue check is O(n^3); skip it for matrices past this size.
_PSD_CHECK_MAX_N = 2048


@dataclass(frozen=True)
class SvmConfig:
    """Box constraint, stopping rule and kernel choice.

    rbf kernels use exp(-gamma * ||x - x'||^2); when ``gamma`` is left
    unset it defaults to 1/d at training time.  ``class_weight`` (off by
    default) scales the per-class box: sample i of class k gets
    C * class_weight[k].
    """

    c: float = 1.0
    tolerance: float = 1e-3
    max_passes: int = 50
    kernel: str = PRECOMPUTED
    gamma: Optional[float] = None
    class_weight: Optional[tuple] = None

    def __post_init__(self):
        if not self.c > 0:
            raise ValueError(f"c must be > 0, got {self.c}")
        if not self.tolerance > 0:
            raise ValueError(f"tolerance must be > 0, got {self.tolerance}")
        if int(self.max_passes) < 1:
            raise ValueError(f"max_passes must be >= 1, got {self.max_passes}")
        object.__setattr__(self, "max_passes", int(self.max_passes))
        if self.kernel not in _KERNELS:
            raise ValueError(f"unknown kernel {self.kernel!r}")
        if self.gamma is not None and not self.gamma > 0:
            raise ValueError(f"gamma must be > 0, got {self.gamma}")
        if self.class_weight is not None:
            cw = tuple(float(w) for w in self.class_weight)
            if len(cw) != 2 or any(not w > 0 for w in cw):
                raise ValueError(
                    f"class_weight must be two positive factors, got {self.class_weight}"
                )
            object.__setattr__(self, "class_weight", cw)


@dataclass(frozen=True)
class SvmModel:
    """Trained dual model.

    ``signed_labels`` are the {-1, +1} training labels backing the
    decision sum; ``kernel_sha256`` fingerprints the training kernel so a
    deserialized model can be matched to its cached matrix.
    ``train_features`` is retained only for linear/rbf models, which must
    evaluate their own kernel rows at prediction time.
    """

    config: SvmConfig
    alphas: np.ndarray = field(repr=False)
    bias: float = 0.0
    signed_labels: np.ndarray = field(repr=False, default=None)
    support_indices: np.ndarray = field(repr=False, default=None)
    kernel_sha256: str = ""
    train_features: Optional[np.ndarray] = field(repr=False, default=None)

    @property
    def label_map(self) -> dict:
        return dict(LABEL_MAP)


def linear_kernel(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Plain dot-product kernel, rows of a against rows of b."""
    return np.asarray(a, dtype=np.float64) @ np.asarray(b, dtype=np.float64).T


def rbf_kernel(a: np.ndarray, b: np.ndarray, gamma: float) -> np.ndarray:
    """exp(-gamma * squared euclidean distance)."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    sq = (
        (a * a).sum(axis=1)[:, None]
        + (b * b).sum(axis=1)[None, :]
        - 2.0 * (a @ b.T)
    )
    return np.exp(-gamma * np.maximum(sq, 0.0))


def _as_kernel_matrix(gram: Union[GramMatrix, np.ndarray]) -> np.ndarray:
    if isinstance(gram, GramMatrix):
        return np.asarray(gram.entries, dtype=np.float64)
    m = np.asarray(gram, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"kernel matrix must be square, got shape {m.shape}")
    return m


def _check_labels(labels: Sequence, n: int) -> np.ndarray:
    y = np.asarray(labels)
    if y.shape != (n,):
        raise ValueError(f"expected {n} labels, got shape {y.shape}")
    y = y.astype(np.int64)
    values = set(np.unique(y).tolist())
    if not values <= {0, 1}:
        raise ValueError(f"labels must be 0/1, got values {sorted(values)}")
    if len(values) < 2:
        raise ValueError("training needs both classes present")
    return y


def train_svm(
    gram: Union[GramMatrix, np.ndarray],
    labels: Sequence,
    config: SvmConfig = SvmConfig(),
    seed: int = 0,
) -> SvmModel:
    """Solve the dual on a precomputed kernel matrix.

    ``seed`` fixes the SMO partner-index stream, making training fully
    deterministic.  A matrix whose smallest eigenvalue falls below
    PSD_WARN_TOL triggers a warning but training proceeds (the check is
    skipped above _PSD_CHECK_MAX_N rows to stay affordable).
    """
    kmat = np.ascontiguousarray(_as_kernel_matrix(gram))
    n = kmat.shape[0]
    y01 = _check_labels(labels, n)
    if config.kernel != PRECOMPUTED:
        raise ValueError(
            f"train_svm takes a precomputed matrix; config says {config.kernel!r}"
            " (use train_svm_features)"
        )
    if n <= _PSD_CHECK_MAX_N:
        min_eig = float(np.linalg.eigvalsh((kmat + kmat.T) / 2.0)[0])
        if min_eig < PSD_WARN_TOL:
            warnings.warn(
                f"kernel matrix is not PSD (min eigenvalue {min_eig:.3e}); "
                "training proceeds but the dual may be ill-posed",
                RuntimeWarning,
                stacklevel=2,
            )
    return _fit(kmat, y01, config, seed, train_features=None)


def train_svm_features(
    features: np.ndarray,
    labels: Sequence,
    config: SvmConfig,
    seed: int = 0,
) -> SvmModel:
    """Train a linear/rbf model straight from feature rows."""
    x = np.asarray(features, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError(f"expected 2-d feature matrix, got shape {x.shape}")
    y01 = _check_labels(labels, x.shape[0])
    if config.kernel == LINEAR:
        kmat = linear_kernel(x, x)
    elif config.kernel == RBF:
        gamma = config.gamma if config.gamma is not None else 1.0 / x.shape[1]
        kmat = rbf_kernel(x, x, gamma)
        config = SvmConfig(
            c=config.c,
            tolerance=config.tolerance,
            max_passes=config.max_passes,
            kernel=RBF,
            gamma=gamma,
            class_weight=config.class_weight,
        )
    else:
        raise ValueError(
            "train_svm_features needs a linear or rbf kernel config"
        )
    return _fit(np.ascontiguousarray(kmat), y01, config, seed, train_features=x)


SUPPORT_EPS = 1e-8


def _fit(kmat, y01, config, seed, train_features) -> SvmModel:
    y = (2 * y01 - 1).astype(np.float64)
    weights = config.class_weight or (1.0, 1.0)
    c_arr = float(config.c) * np.where(y01 == 1, weights[1], weights[0])
    alphas, bias, sweeps = accel.smo_solve(
        kmat,
        y,
        np.ascontiguousarray(c_arr, dtype=np.float64),
        float(config.tolerance),
        int(config.max_passes),
        accel.seed_to_state(seed),
    )
    if sweeps >= accel._SMO_SWEEP_CAP:
        warnings.warn(
            f"SMO hit the sweep cap ({sweeps} sweeps) before "
            f"{config.max_passes} clean passes; model may not satisfy KKT",
            RuntimeWarning,
            stacklevel=3,
        )
    support = np.flatnonzero(alphas > SUPPORT_EPS)
    return SvmModel(
        config=config,
        alphas=alphas,
        bias=float(bias),
        signed_labels=y.astype(np.int64),
        support_indices=support,
        kernel_sha256=matrix_sha256(kmat),
        train_features=train_features,
    )


def decision_function(model: SvmModel, kernel_rows: np.ndarray) -> np.ndarray:
    """Decision values for rows of kernel entries against the train set."""
    k = np.asarray(kernel_rows, dtype=np.float64)
    if k.ndim == 1:
        k = k[None, :]
    n = model.alphas.shape[0]
    if k.shape[1] != n:
        raise ValueError(
            f"kernel rows have {k.shape[1]} columns, model was trained on {n}"
        )
    coef = model.alphas * model.signed_labels
    return k @ coef + model.bias


def predict(model: SvmModel, kernel_rows: np.ndarray) -> np.ndarray:
    """Class labels from kernel rows; decision >= 0 maps to class 1."""
    return (decision_function(model, kernel_rows) >= 0.0).astype(np.int64)


def predict_features(model: SvmModel, features: np.ndarray) -> np.ndarray:
    """Class labels straight from feature rows (linear/rbf models only)."""
    if model.train_features is None:
        raise ValueError(
            "model has no stored training features; pass kernel rows instead"
        )
    x = np.asarray(features, dtype=np.float64)
    if model.config.kernel == LINEAR:
        rows = linear_kernel(x, model.train_features)
    else:
        rows = rbf_kernel(x, model.train_features, model.config.gamma)
    return predict(model, rows)


def dual_objective(
    kmat: np.ndarray, labels: Sequence, alphas: np.ndarray
) -> float:
    """Dual value W(alpha) = sum(alpha) - 0.5 * (alpha y)' K (alpha y)."""
    kmat = _as_kernel_matrix(kmat)
    y = 2.0 * np.asarray(labels, dtype=np.float64) - 1.0
    v = alphas * y
    return float(alphas.sum() - 0.5 * v @ kmat @ v)


def model_to_text(model: SvmModel) -> str:
    """Serialize to a JSON document (floats survive exactly via repr)."""
    doc = {
        "format": "qkml-svm",
        "version": 1,
        "config": {
            "c": model.config.c,
            "tolerance": model.config.tolerance,
            "max_passes": model.config.max_passes,
            "kernel": model.config.kernel,
            "gamma": model.config.gamma,
            "class_weight": (
                None if model.config.class_weight is None
                else list(model.config.class_weight)
            ),
        },
        "alphas": model.alphas.tolist(),
        "bias": model.bias,
        "signed_labels": model.signed_labels.tolist(),
        "support_indices": model.support_indices.tolist(),
        "label_map": {str(k): v for k, v in LABEL_MAP.items()},
        "kernel_sha256": model.kernel_sha256,
        "train_features": (
            None
            if model.train_features is None
            else model.train_features.tolist()
        ),
    }
    return json.dumps(doc, indent=2, sort_keys=True)


def model_from_text(text: str) -> SvmModel:
    doc = json.loads(text)
    if doc.get("format") != "qkml-svm" or doc.get("version") != 1:
        raise ValueError("not a qkml-svm version 1 document")
    cfg = doc["config"]
    cw = cfg.get("class_weight")
    config = SvmConfig(
        c=cfg["c"],
        tolerance=cfg["tolerance"],
        max_passes=cfg["max_passes"],
        kernel=cfg["kernel"],
        gamma=cfg["gamma"],
        class_weight=None if cw is None else tuple(cw),
    )
    feats = doc.get("train_features")
    return SvmModel(
        config=config,
        alphas=np.asarray(doc["alphas"], dtype=np.float64),
        bias=float(doc["bias"]),
        signed_labels=np.asarray(doc["signed_labels"], dtype=np.int64),
        support_indices=np.asarray(doc["support_indices"], dtype=np.int64),
        kernel_sha256=doc.get("kernel_sha256", ""),
        train_features=(
            None if feats is None else np.asarray(feats, dtype=np.float64)
        ),
    )

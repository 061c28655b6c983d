"""Quanvolutional preprocessing plus a small dense softmax network.

The quanvolution slides a width-w window over each 1-d feature vector
(step = stride).  Window values enter a w-qubit register as RY angles,
a frozen random circuit (seeded RY layer + CNOT chain, repeated
``layers`` times) mixes them, and the per-qubit Z expectations are the
window's outputs, so each vector maps to num_windows * w values in
[-1, 1].  The circuit parameters are drawn once from ``circuit_seed``
and are never trained.

The classifier is a fully connected ReLU network with a 2-way softmax
head, trained by mini-batch SGD on cross-entropy.  Training is a pure
function of (data, config): Xavier-uniform init and epoch shuffling both
come from seeded generators.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from .dataset import Dataset
from .statevector import Circuit, cnot, init_zero, run_circuit, ry, z_expectation


@dataclass(frozen=True)
class QuanvSpec:
    """Window geometry and frozen-circuit parameters."""

    window: int = 4
    stride: int = 4
    layers: int = 1
    circuit_seed: int = 0

    def __post_init__(self):
        if int(self.window) < 1:
            raise ValueError(f"window must be >= 1, got {self.window}")
        if int(self.stride) < 1:
            raise ValueError(f"stride must be >= 1, got {self.stride}")
        if int(self.layers) < 0:
            raise ValueError(f"layers must be >= 0, got {self.layers}")


def build_quanv_circuit(spec: QuanvSpec) -> Circuit:
    """The frozen mixing circuit (no data-encoding gates).

    Per layer: one seeded RY on every qubit (angles uniform on
    [0, 2*pi)), then a CNOT chain (q, q+1).  ``layers=0`` gives an empty
    circuit, i.e. the transform reduces to plain RY readout.
    """
    rng = np.random.default_rng(spec.circuit_seed)
    gates = []
    for _ in range(spec.layers):
        angles = rng.uniform(0.0, 2.0 * math.pi, size=spec.window)
        for q in range(spec.window):
            gates.append(ry(angles[q], q))
        for q in range(spec.window - 1):
            gates.append(cnot(q, q + 1))
    return Circuit(spec.window, tuple(gates))


def quanv_output_width(spec: QuanvSpec, n_features: int) -> int:
    if n_features < spec.window:
        raise ValueError(
            f"need at least window={spec.window} features, got {n_features}"
        )
    n_windows = (n_features - spec.window) // spec.stride + 1
    return n_windows * spec.window


def quanv_transform(spec: QuanvSpec, x) -> np.ndarray:
    """Expectation readout of every window of one feature vector."""
    vec = np.asarray(x, dtype=np.float64)
    if vec.ndim != 1:
        raise ValueError(f"expected a 1-d vector, got shape {vec.shape}")
    mix = build_quanv_circuit(spec)
    return _transform_one(spec, mix, vec)


def _transform_one(spec: QuanvSpec, mix: Circuit, vec: np.ndarray) -> np.ndarray:
    w = spec.window
    if vec.shape[0] < w:
        raise ValueError(f"need at least window={w} features, got {vec.shape[0]}")
    out = []
    for pos in range(0, vec.shape[0] - w + 1, spec.stride):
        encode = tuple(ry(float(vec[pos + q]), q) for q in range(w))
        state = run_circuit(
            Circuit(w, encode + mix.gates), init_zero(w)
        )
        out.extend(z_expectation(state, q) for q in range(w))
    return np.asarray(out, dtype=np.float64)


def quanv_transform_batch(spec: QuanvSpec, features, threads: int = 1) -> np.ndarray:
    """Transform every row; thread count never changes the output."""
    x = np.asarray(features, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError(f"expected a 2-d matrix, got shape {x.shape}")
    mix = build_quanv_circuit(spec)
    n = x.shape[0]
    width = quanv_output_width(spec, x.shape[1])
    out = np.empty((n, width), dtype=np.float64)
    threads = max(1, int(threads))
    if threads == 1 or n < 2:
        for i in range(n):
            out[i] = _transform_one(spec, mix, x[i])
        return out

    def fill(lo, hi):
        for i in range(lo, hi):
            out[i] = _transform_one(spec, mix, x[i])

    step = (n + threads - 1) // threads
    with ThreadPoolExecutor(max_workers=threads) as pool:
        for f in [
            pool.submit(fill, lo, min(lo + step, n)) for lo in range(0, n, step)
        ]:
            f.result()
    return out


# -- dense network ------------------------------------------------------------


@dataclass(frozen=True)
class DenseNet:
    """Layer sizes plus weight/bias arrays (weights[i]: sizes[i] x sizes[i+1])."""

    sizes: tuple
    weights: tuple = field(repr=False)
    biases: tuple = field(repr=False)


def init_dense(sizes, seed: int = 0) -> DenseNet:
    """Xavier-uniform weights, zero biases, drawn layer by layer."""
    sizes = tuple(int(s) for s in sizes)
    if len(sizes) < 2:
        raise ValueError("need at least input and output layer sizes")
    if any(s < 1 for s in sizes):
        raise ValueError(f"layer sizes must be >= 1, got {sizes}")
    rng = np.random.default_rng(seed)
    weights = []
    biases = []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        limit = math.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return DenseNet(sizes, tuple(weights), tuple(biases))


def _forward(net: DenseNet, x: np.ndarray):
    """Returns (pre-activations, activations); ReLU hidden, linear head."""
    zs = []
    acts = [x]
    a = x
    last = len(net.weights) - 1
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        z = a @ w + b
        zs.append(z)
        a = z if i == last else np.maximum(z, 0.0)
        acts.append(a)
    return zs, acts


def predict_proba(net: DenseNet, features) -> np.ndarray:
    """Row-wise softmax over the head logits."""
    x = np.atleast_2d(np.asarray(features, dtype=np.float64))
    _, acts = _forward(net, x)
    logits = acts[-1]
    shifted = logits - logits.max(axis=1, keepdims=True)
    expd = np.exp(shifted)
    return expd / expd.sum(axis=1, keepdims=True)


def predict_classes(net: DenseNet, features) -> np.ndarray:
    return predict_proba(net, features).argmax(axis=1).astype(np.int64)


def cross_entropy(net: DenseNet, features, labels) -> float:
    """Mean softmax cross-entropy, computed in log-sum-exp form."""
    x = np.atleast_2d(np.asarray(features, dtype=np.float64))
    y = np.asarray(labels, dtype=np.int64)
    _, acts = _forward(net, x)
    logits = acts[-1]
    m = logits.max(axis=1)
    lse = m + np.log(np.exp(logits - m[:, None]).sum(axis=1))
    return float(np.mean(lse - logits[np.arange(x.shape[0]), y]))


def loss_and_gradients(net: DenseNet, features, labels):
    """(loss, weight grads, bias grads) for one batch."""
    x = np.atleast_2d(np.asarray(features, dtype=np.float64))
    y = np.asarray(labels, dtype=np.int64)
    n = x.shape[0]
    zs, acts = _forward(net, x)
    logits = acts[-1]
    m = logits.max(axis=1)
    lse = m + np.log(np.exp(logits - m[:, None]).sum(axis=1))
    loss = float(np.mean(lse - logits[np.arange(n), y]))
    probs = np.exp(logits - lse[:, None])
    delta = probs
    delta[np.arange(n), y] -= 1.0
    delta /= n
    grads_w = [None] * len(net.weights)
    grads_b = [None] * len(net.biases)
    for layer in range(len(net.weights) - 1, -1, -1):
        grads_w[layer] = acts[layer].T @ delta
        grads_b[layer] = delta.sum(axis=0)
        if layer > 0:
            delta = (delta @ net.weights[layer].T) * (zs[layer - 1] > 0.0)
    return loss, grads_w, grads_b


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 100
    learning_rate: float = 0.05
    batch_size: int = 32
    seed: int = 0

    def __post_init__(self):
        if int(self.epochs) < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if not self.learning_rate > 0:
            raise ValueError(f"learning_rate must be > 0, got {self.learning_rate}")
        if int(self.batch_size) < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")


@dataclass
class TrainHistory:
    """Per-epoch full-dataset evaluations (val lists empty without a
    validation set)."""

    train_loss: list = field(default_factory=list)
    train_acc: list = field(default_factory=list)
    val_loss: list = field(default_factory=list)
    val_acc: list = field(default_factory=list)


def _accuracy_of(net, x, y) -> float:
    return float((predict_classes(net, x) == y).mean())


def train_dense(
    net: DenseNet,
    features,
    labels,
    config: TrainConfig = TrainConfig(),
    val_features=None,
    val_labels=None,
) -> Tuple[DenseNet, TrainHistory]:
    """Mini-batch SGD; returns the trained net and its history."""
    x = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    if x.ndim != 2 or x.shape[0] != y.shape[0]:
        raise ValueError("features/labels shape mismatch")
    if x.shape[1] != net.sizes[0]:
        raise ValueError(
            f"net expects {net.sizes[0]} inputs, data has {x.shape[1]}"
        )
    has_val = val_features is not None
    if has_val:
        xv = np.asarray(val_features, dtype=np.float64)
        yv = np.asarray(val_labels, dtype=np.int64)
    weights = [w.copy() for w in net.weights]
    biases = [b.copy() for b in net.biases]
    rng = np.random.default_rng(config.seed)
    history = TrainHistory()
    n = x.shape[0]
    for epoch in range(config.epochs):
        perm = rng.permutation(n)
        for lo in range(0, n, config.batch_size):
            idx = perm[lo : lo + config.batch_size]
            current = DenseNet(net.sizes, tuple(weights), tuple(biases))
            _, gw, gb = loss_and_gradients(current, x[idx], y[idx])
            for layer in range(len(weights)):
                weights[layer] -= config.learning_rate * gw[layer]
                biases[layer] -= config.learning_rate * gb[layer]
        current = DenseNet(net.sizes, tuple(weights), tuple(biases))
        loss = cross_entropy(current, x, y)
        if not np.isfinite(loss):
            raise ValueError(
                f"training diverged: non-finite loss after epoch {epoch + 1} "
                f"(learning_rate={config.learning_rate})"
            )
        history.train_loss.append(loss)
        history.train_acc.append(_accuracy_of(current, x, y))
        if has_val:
            history.val_loss.append(cross_entropy(current, xv, yv))
            history.val_acc.append(_accuracy_of(current, xv, yv))
    return DenseNet(net.sizes, tuple(weights), tuple(biases)), history


def compare_hybrid(
    train_ds: Dataset,
    val_ds: Dataset,
    quanv: QuanvSpec,
    hidden=(16,),
    config: TrainConfig = TrainConfig(),
    threads: int = 1,
) -> dict:
    """Train the same dense architecture on raw features (classical arm)
    and on quanvolved features (hybrid arm) with identical seeds.

    Returns both histories plus the trained nets, keyed by arm name.
    """
    hidden = tuple(int(h) for h in hidden)
    arms = {}

    raw_sizes = (train_ds.features.shape[1],) + hidden + (2,)
    net_c = init_dense(raw_sizes, seed=config.seed)
    net_c, hist_c = train_dense(
        net_c,
        train_ds.features,
        train_ds.labels,
        config,
        val_ds.features,
        val_ds.labels,
    )
    arms["classical"] = {"net": net_c, "history": hist_c}

    xq_train = quanv_transform_batch(quanv, train_ds.features, threads=threads)
    xq_val = quanv_transform_batch(quanv, val_ds.features, threads=threads)
    q_sizes = (xq_train.shape[1],) + hidden + (2,)
    net_q = init_dense(q_sizes, seed=config.seed)
    net_q, hist_q = train_dense(
        net_q, xq_train, train_ds.labels, config, xq_val, val_ds.labels
    )
    arms["hybrid"] = {"net": net_q, "history": hist_q}
    return arms


def curves_csv(arms: dict) -> str:
    """Long-format training curves: epoch, arm, losses and accuracies."""
    lines = ["epoch,arm,train_loss,train_acc,val_loss,val_acc"]
    for arm in sorted(arms):
        hist = arms[arm]["history"]
        for e in range(len(hist.train_loss)):
            vl = repr(hist.val_loss[e]) if hist.val_loss else ""
            va = repr(hist.val_acc[e]) if hist.val_acc else ""
            lines.append(
                f"{e},{arm},{hist.train_loss[e]!r},{hist.train_acc[e]!r},{vl},{va}"
            )
    return "\n".join(lines) + "\n"

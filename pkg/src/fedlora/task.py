"""Synthetic classification task with a frozen linear backbone.

Features are a Gaussian mixture with one unit-covariance component per
class; the class means sit on a regular simplex so every pair is exactly
``class_separation`` apart. Clients train only their low-rank adapter by
minibatch SGD on softmax cross-entropy; the backbone (and the accumulated
global delta) stays frozen during local training.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .adapters import AdapterPair, GlobalModel, init_adapter


class Split(str, Enum):
    TRAIN = "train"
    TEST = "test"


class PartitionInfeasibleError(ValueError):
    """Raised when repeated partition draws cannot satisfy the minimum shard size."""


class TrainingDivergedError(RuntimeError):
    """Raised when local training produces a non-finite loss."""


@dataclass(frozen=True)
class Dataset:
    features: np.ndarray
    labels: np.ndarray
    split: Split = Split.TRAIN

    def __post_init__(self):
        x = np.asarray(self.features, dtype=np.float64)
        y = np.asarray(self.labels, dtype=np.int64)
        if x.ndim != 2 or y.ndim != 1 or x.shape[0] != y.shape[0]:
            raise ValueError("features must be (n, d) and labels (n,)")
        if y.size and y.min() < 0:
            raise ValueError("labels must be non-negative class indices")
        object.__setattr__(self, "features", x)
        object.__setattr__(self, "labels", y)
        object.__setattr__(self, "split", Split(self.split))

    def __len__(self) -> int:
        return self.labels.size


@dataclass(frozen=True)
class TaskConfig:
    """Desk-scale defaults for the synthetic task and local optimizer."""

    d_in: int = 32
    n_classes: int = 4
    n_per_client: int = 500
    class_separation: float = 3.0
    rank: int = 4
    lora_alpha: float = 32.0
    learning_rate: float = 0.01
    local_epochs: int = 2
    batch_size: int = 32
    init_std: float = 0.02

    def __post_init__(self):
        if self.rank < 1 or self.rank > min(self.d_in, self.n_classes):
            raise ValueError("rank must be in [1, min(d_in, n_classes)]")
        if self.d_in < self.n_classes:
            raise ValueError("d_in must be >= n_classes for simplex class means")
        if self.n_per_client < 1 or self.batch_size < 1:
            raise ValueError("n_per_client and batch_size must be positive")
        if self.local_epochs < 0:
            raise ValueError("local_epochs must be non-negative")

    @property
    def scale(self) -> float:
        """Multiplier applied to the adapter product in forward passes and merges."""
        return self.lora_alpha / self.rank


def class_means(n_classes: int, d_in: int, separation: float) -> np.ndarray:
    """Means on the axis-aligned regular simplex: all pairs exactly ``separation`` apart."""
    if d_in < n_classes:
        raise ValueError("d_in must be >= n_classes")
    means = np.zeros((n_classes, d_in))
    means[np.arange(n_classes), np.arange(n_classes)] = separation / np.sqrt(2.0)
    return means


def gen_mixture_data(
    n: int,
    d_in: int,
    n_classes: int,
    separation: float,
    rng: np.random.Generator,
    split: Split = Split.TRAIN,
) -> Dataset:
    """Balanced mixture sample: n // C per class, remainder spread over the first classes."""
    if n < n_classes:
        raise ValueError("need at least one sample per class")
    counts = np.full(n_classes, n // n_classes)
    counts[: n % n_classes] += 1
    labels = np.repeat(np.arange(n_classes), counts)
    labels = labels[rng.permutation(n)]
    means = class_means(n_classes, d_in, separation)
    features = means[labels] + rng.standard_normal((n, d_in))
    return Dataset(features, labels, split)


def sample_shard(
    n: int,
    class_weights: np.ndarray,
    d_in: int,
    separation: float,
    rng: np.random.Generator,
) -> Dataset:
    """Fresh non-IID shard: labels drawn i.i.d. from the client's class distribution."""
    weights = np.asarray(class_weights, dtype=np.float64)
    labels = rng.choice(weights.size, size=n, p=weights)
    means = class_means(weights.size, d_in, separation)
    features = means[labels] + rng.standard_normal((n, d_in))
    return Dataset(features, labels, Split.TRAIN)


def dirichlet_class_weights(
    n_clients: int,
    n_classes: int,
    alpha_dir: float,
    rng: np.random.Generator,
    max_redraws: int = 100,
) -> np.ndarray:
    """Per-client class distributions induced by a per-class Dirichlet split.

    Row c of the underlying draw gives class c's proportions across clients;
    a client's own distribution is its column, renormalized. Draws leaving a
    client with (numerically) no mass are retried.
    """
    if alpha_dir <= 0:
        raise ValueError("alpha_dir must be positive")
    for _ in range(max_redraws):
        shares = rng.dirichlet(alpha_dir * np.ones(n_clients), size=n_classes)
        mass = shares.sum(axis=0)
        if (mass > 1e-12).all():
            return (shares / mass).T
    raise PartitionInfeasibleError(
        f"could not draw usable class proportions after {max_redraws} attempts "
        f"(alpha_dir={alpha_dir}, n_clients={n_clients})"
    )


def dirichlet_partition(
    data: Dataset,
    n_clients: int,
    alpha_dir: float,
    rng: np.random.Generator,
    min_samples: int = 1,
    max_redraws: int = 100,
) -> list[Dataset]:
    """Split a dataset across clients: per class, proportions ~ Dirichlet(alpha).

    Every sample lands on exactly one client. The whole partition is
    re-drawn while some client holds fewer than ``min_samples`` samples;
    after ``max_redraws`` failures a configuration error is raised.
    """
    if alpha_dir <= 0:
        raise ValueError("alpha_dir must be positive")
    if n_clients < 1:
        raise ValueError("n_clients must be >= 1")
    n_classes = int(data.labels.max()) + 1 if len(data) else 0
    for _ in range(max_redraws):
        assigned: list[list[np.ndarray]] = [[] for _ in range(n_clients)]
        for c in range(n_classes):
            idx = np.flatnonzero(data.labels == c)
            idx = rng.permutation(idx)
            proportions = rng.dirichlet(alpha_dir * np.ones(n_clients))
            cuts = (np.cumsum(proportions)[:-1] * idx.size).astype(int)
            for client, chunk in enumerate(np.split(idx, cuts)):
                assigned[client].append(chunk)
        rows = [np.concatenate(chunks) if chunks else np.array([], dtype=int) for chunks in assigned]
        if min(r.size for r in rows) >= min_samples:
            return [Dataset(data.features[r], data.labels[r], data.split) for r in rows]
    raise PartitionInfeasibleError(
        f"a client received fewer than {min_samples} samples in each of "
        f"{max_redraws} partition draws (alpha_dir={alpha_dir}, n_clients={n_clients})"
    )


def loss_and_grads(
    a_mat: np.ndarray,
    b_mat: np.ndarray,
    base_weights: np.ndarray,
    features: np.ndarray,
    labels: np.ndarray,
    scale: float,
) -> tuple[float, np.ndarray, np.ndarray]:
    """Softmax cross-entropy of logits (base + scale*B@A) @ x, with grads for A and B."""
    m = features.shape[0]
    w = base_weights + scale * (b_mat @ a_mat)
    z = features @ w.T
    z = z - z.max(axis=1, keepdims=True)
    logp = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
    loss = -logp[np.arange(m), labels].mean()
    g = np.exp(logp)
    g[np.arange(m), labels] -= 1.0
    g /= m
    dw = g.T @ features
    return float(loss), scale * (b_mat.T @ dw), scale * (dw @ a_mat.T)


def local_train(
    model: GlobalModel, data: Dataset, cfg: TaskConfig, rng: np.random.Generator
) -> AdapterPair:
    """Train a fresh adapter against the frozen current global weights.

    Returns the round-local update only (the freshly trained B@A); the
    caller owns accumulation into the global delta.
    """
    if len(data) == 0:
        raise ValueError("cannot train on an empty dataset")
    adapter = init_adapter(cfg.rank, cfg.d_in, model.d_out, cfg.init_std, rng)
    a, b = adapter.a_mat.copy(), adapter.b_mat.copy()
    frozen = model.effective()
    n = len(data)
    with np.errstate(over="ignore", invalid="ignore"):  # divergence is checked explicitly
        for epoch in range(cfg.local_epochs):
            order = rng.permutation(n)
            for start in range(0, n, cfg.batch_size):
                rows = order[start : start + cfg.batch_size]
                loss, da, db = loss_and_grads(
                    a, b, frozen, data.features[rows], data.labels[rows], cfg.scale
                )
                if not np.isfinite(loss):
                    raise TrainingDivergedError(
                        f"non-finite loss at epoch {epoch}, batch offset {start} "
                        f"(lr={cfg.learning_rate}, scale={cfg.scale})"
                    )
                a -= cfg.learning_rate * da
                b -= cfg.learning_rate * db
    return AdapterPair(a, b)


def evaluate(
    model: GlobalModel,
    data: Dataset,
    adapter: AdapterPair | None = None,
    adapter_scale: float = 1.0,
) -> float:
    """Argmax-logit accuracy of the model (optionally plus a scaled live adapter)."""
    w = model.effective()
    if adapter is not None:
        w = w + adapter_scale * adapter.delta()
    predictions = np.argmax(data.features @ w.T, axis=1)
    return float(np.mean(predictions == data.labels))


def save_dataset(path, data: Dataset, n_classes: int | None = None) -> None:
    """Write a dataset as CSV: header line ``d_in,n_classes,n``, then one
    ``label,f0,...,f{d-1}`` row per sample."""
    if n_classes is None:
        n_classes = int(data.labels.max()) + 1 if len(data) else 0
    d_in = data.features.shape[1]
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"{d_in},{n_classes},{len(data)}\n")
        for row, label in zip(data.features, data.labels):
            fh.write(",".join([str(int(label))] + [repr(float(v)) for v in row]) + "\n")


def load_dataset(path, split: Split = Split.TRAIN) -> tuple[Dataset, int]:
    """Read a dataset written by ``save_dataset``; returns (dataset, n_classes)."""
    with open(path, "r", encoding="ascii") as fh:
        d_in, n_classes, n = (int(v) for v in fh.readline().split(","))
        features = np.empty((n, d_in))
        labels = np.empty(n, dtype=np.int64)
        for i in range(n):
            parts = fh.readline().split(",")
            labels[i] = int(parts[0])
            features[i] = [float(v) for v in parts[1:]]
    if features.shape[1] != d_in:
        raise ValueError("corrupt dataset file: feature width mismatch")
    return Dataset(features, labels, split), n_classes

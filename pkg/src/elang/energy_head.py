"""Linear classification head over frozen Swift encoder features.

The head is a single linear layer trained as an ordinary softmax classifier
on exported (features, label) pairs, then used to compute energy scores
without ever running the Swift decoder. Training is plain mini-batch
gradient descent from zero-initialized parameters: the objective is convex,
zero init makes the pre-training loss exactly ln(C), and the only
randomness is the shuffle order, keyed by the config seed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._util import atomic_write_text
from .records import CLASSIFICATION, Dataset, SampleRecord
from .scoring import _lse_rows, neg_free_energy


class HeadError(Exception):
    """Invalid head parameters, incompatible data, or a diverged training run."""


@dataclass(frozen=True)
class EnergyHead:
    """weights (C, D) and bias (C,) of the linear head."""

    weights: np.ndarray
    bias: np.ndarray

    def __post_init__(self) -> None:
        w = np.asarray(self.weights, dtype=np.float64)
        b = np.asarray(self.bias, dtype=np.float64)
        if w.ndim != 2 or b.ndim != 1 or w.shape[0] != b.shape[0]:
            raise HeadError(f"bad head shapes: weights {w.shape}, bias {b.shape}")
        if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
            raise HeadError("head parameters must be finite")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "bias", b)

    @property
    def num_classes(self) -> int:
        return self.weights.shape[0]

    @property
    def feature_dim(self) -> int:
        return self.weights.shape[1]


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.1
    epochs: int = 100
    batch_size: int = 32
    l2: float = 0.0
    seed: int = 0  # shuffle order only

    def __post_init__(self) -> None:
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.l2 < 0:
            raise ValueError("l2 must be >= 0")


@dataclass(frozen=True)
class TrainResult:
    head: EnergyHead
    initial_loss: float
    epoch_losses: tuple[float, ...]  # full-dataset loss after each epoch
    train_accuracy: float

    @property
    def final_loss(self) -> float:
        return self.epoch_losses[-1]


def head_logits(head: EnergyHead, features) -> np.ndarray:
    """weights @ features + bias for one feature vector."""
    f = np.asarray(features, dtype=np.float64)
    if f.ndim != 1:
        raise HeadError(f"features must be a vector, got shape {f.shape}")
    if f.shape[0] != head.feature_dim:
        raise HeadError(f"feature dim {f.shape[0]} does not match head dim {head.feature_dim}")
    if not np.all(np.isfinite(f)):
        raise HeadError("features must be finite")
    return head.weights @ f + head.bias


def head_logits_batch(head: EnergyHead, features: np.ndarray) -> np.ndarray:
    """(N, D) features -> (N, C) logits."""
    f = np.asarray(features, dtype=np.float64)
    if f.ndim != 2 or f.shape[1] != head.feature_dim:
        raise HeadError(f"features must be (N, {head.feature_dim}), got {f.shape}")
    if not np.all(np.isfinite(f)):
        raise HeadError("features must be finite")
    return f @ head.weights.T + head.bias


def head_energy_score(head: EnergyHead, record: SampleRecord) -> float:
    """Energy score from encoder features alone: lse(head_logits(features))."""
    if record.encoder_features is None:
        raise HeadError(f"record {record.id!r} has no encoder features")
    return neg_free_energy(head_logits(head, record.encoder_features))


def loss_and_gradients(
    weights: np.ndarray,
    bias: np.ndarray,
    features: np.ndarray,
    labels: np.ndarray,
    l2: float = 0.0,
) -> tuple[float, np.ndarray, np.ndarray]:
    """Mean softmax cross-entropy over a batch, plus its exact gradients.

    Loss = mean(-log p[label]) + (l2/2) * ||weights||^2; bias unregularized.
    """
    z = features @ weights.T + bias  # (B, C)
    logp = z - _lse_rows(z)[:, None]
    n = features.shape[0]
    picked = logp[np.arange(n), labels]
    loss = -picked.mean() + 0.5 * l2 * float(np.sum(weights * weights))
    p = np.exp(logp)
    g = p.copy()
    g[np.arange(n), labels] -= 1.0
    grad_w = g.T @ features / n + l2 * weights
    grad_b = g.mean(axis=0)
    return float(loss), grad_w, grad_b


def _training_arrays(dataset: Dataset) -> tuple[np.ndarray, np.ndarray]:
    if dataset.task_kind != CLASSIFICATION:
        raise HeadError("head training expects a classification dataset")
    if not dataset.has_features:
        raise HeadError("head training requires encoder features on every record")
    if not dataset.has_labels:
        raise HeadError("head training requires gold labels on every record")
    features = np.stack([r.encoder_features for r in dataset.records])
    labels = np.array([r.label for r in dataset.records], dtype=np.int64)
    return features, labels


def train_head(dataset: Dataset, config: TrainConfig = TrainConfig()) -> TrainResult:
    """Fit the head by mini-batch gradient descent from zero init.

    Deterministic given config.seed. Raises HeadError if the loss goes
    non-finite (learning rate too high for the data scale).
    """
    features, labels = _training_arrays(dataset)
    n, dim = features.shape
    num_classes = dataset.num_classes
    weights = np.zeros((num_classes, dim))
    bias = np.zeros(num_classes)
    rng = np.random.default_rng(config.seed % 2**64)

    def full_loss() -> float:
        loss, _, _ = loss_and_gradients(weights, bias, features, labels, config.l2)
        return loss

    initial_loss = full_loss()
    epoch_losses = []
    # overflow on a diverging run is expected right up until the finite check
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(config.epochs):
            order = rng.permutation(n)
            for start in range(0, n, config.batch_size):
                batch = order[start : start + config.batch_size]
                _, grad_w, grad_b = loss_and_gradients(
                    weights, bias, features[batch], labels[batch], config.l2
                )
                weights -= config.learning_rate * grad_w
                bias -= config.learning_rate * grad_b
            loss = full_loss()
            if not np.isfinite(loss):
                raise HeadError("training loss went non-finite; lower the learning rate")
            epoch_losses.append(loss)

    predicted = np.argmax(features @ weights.T + bias, axis=1)
    accuracy = float(np.mean(predicted == labels))
    return TrainResult(
        head=EnergyHead(weights=weights, bias=bias),
        initial_loss=initial_loss,
        epoch_losses=tuple(epoch_losses),
        train_accuracy=accuracy,
    )


def save_head(path: str | Path, head: EnergyHead) -> None:
    obj = {
        "num_classes": head.num_classes,
        "feature_dim": head.feature_dim,
        "weights": head.weights.tolist(),
        "bias": head.bias.tolist(),
    }
    atomic_write_text(path, json.dumps(obj, allow_nan=False) + "\n")


def load_head(path: str | Path) -> EnergyHead:
    try:
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise HeadError(f"head checkpoint {path}: invalid JSON ({exc.msg})") from None
    for key in ("num_classes", "feature_dim", "weights", "bias"):
        if key not in obj:
            raise HeadError(f"head checkpoint {path}: missing field {key!r}")
    head = EnergyHead(weights=np.asarray(obj["weights"], dtype=np.float64),
                      bias=np.asarray(obj["bias"], dtype=np.float64))
    if head.num_classes != obj["num_classes"] or head.feature_dim != obj["feature_dim"]:
        raise HeadError(
            f"head checkpoint {path}: declared dims ({obj['num_classes']}, {obj['feature_dim']}) "
            f"do not match arrays ({head.num_classes}, {head.feature_dim})"
        )
    return head

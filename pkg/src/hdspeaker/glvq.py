"""Generalized Learning Vector Quantization over speaker prototypes.

One prototype per speaker, initialised from the unit-normalised centroid
profiles. Distances are squared Euclidean between unit vectors, so the
nearest prototype is also the most cosine-similar one.
"""

from __future__ import annotations

from collections.abc import Callable, Mapping, Sequence
from dataclasses import dataclass

import numpy as np

from .vsa import raw_stream

GATES = ("misclassified_only", "all")


@dataclass
class PrototypeSet:
    """Unit-norm prototype rows ``(S, D)`` and their speaker labels."""

    prototypes: np.ndarray
    labels: list[str]

    def __post_init__(self):
        self.prototypes = np.asarray(self.prototypes, dtype=np.float64)
        self.labels = list(self.labels)
        self._index = {lab: i for i, lab in enumerate(self.labels)}
        if len(self._index) != len(self.labels):
            raise ValueError("duplicate prototype labels")

    def index(self, label: str) -> int:
        return self._index[label]

    def copy(self) -> PrototypeSet:
        return PrototypeSet(self.prototypes.copy(), list(self.labels))

    def __len__(self) -> int:
        return len(self.labels)


@dataclass(frozen=True)
class GlvqConfig:
    epochs: int = 30
    learning_rate: float = 0.05
    lr_decay: float = 1.0
    shuffle_seed: int = 0
    update_gate: str = "misclassified_only"

    def __post_init__(self):
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be > 0")
        if self.update_gate not in GATES:
            raise ValueError(f"update_gate must be one of {GATES}")


@dataclass(frozen=True)
class EpochStats:
    epoch: int
    train_misclassified: int
    test_top1: float = float("nan")
    test_top5: float = float("nan")
    test_top10: float = float("nan")

    CSV_HEADER = ("epoch", "train_misclassified", "top1", "top5", "top10")

    def row(self) -> tuple:
        return (self.epoch, self.train_misclassified, self.test_top1, self.test_top5, self.test_top10)


def unit(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    n = np.linalg.norm(x, axis=-1, keepdims=True)
    if np.any(n == 0):
        raise ValueError("cannot unit-normalize a zero vector")
    return x / n


def init_prototypes(speaker_profiles: Mapping[str, np.ndarray]) -> PrototypeSet:
    """Unit-normalised speaker profiles, in sorted label order."""
    if len(speaker_profiles) < 2:
        raise ValueError("GLVQ needs at least two speakers")
    labels = sorted(speaker_profiles)
    rows = []
    for lab in labels:
        v = np.asarray(speaker_profiles[lab], dtype=np.float64)
        n = np.linalg.norm(v)
        if n == 0:
            raise ValueError(f"speaker {lab!r} has a zero-norm profile")
        rows.append(v / n)
    return PrototypeSet(np.vstack(rows), labels)


def sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def relative_distance(d_j: float, d_k: float) -> float:
    return (d_j - d_k) / (d_j + d_k)


def glvq_loss(x, w_j, w_k) -> float:
    """``sigmoid(mu)`` for one sample; the quantity each step descends."""
    d_j = float(np.sum((x - w_j) ** 2))
    d_k = float(np.sum((x - w_k) ** 2))
    return float(sigmoid(relative_distance(d_j, d_k)))


def glvq_updates(x, w_j, w_k) -> tuple[float, np.ndarray, np.ndarray]:
    """Return ``mu`` and the descent directions for ``w_j`` and ``w_k``.

    The directions are the negative gradients of ``sigmoid(mu)``; a step is
    ``w += lr * direction``.
    """
    dx_j = x - w_j
    dx_k = x - w_k
    d_j = float(dx_j @ dx_j)
    d_k = float(dx_k @ dx_k)
    denom = (d_j + d_k) ** 2
    mu = relative_distance(d_j, d_k)
    s = sigmoid(mu)
    g = s * (1.0 - s)
    return mu, g * 4.0 * d_k / denom * dx_j, -g * 4.0 * d_j / denom * dx_k


def _nearest_rival(protos: np.ndarray, x: np.ndarray, j: int) -> tuple[int, float, float]:
    d = np.sum((protos - x) ** 2, axis=1)
    d_j = d[j]
    d[j] = np.inf
    k = int(np.argmin(d))
    return k, float(d_j), float(d[k])


def _step_inplace(protos: np.ndarray, x: np.ndarray, j: int, lr: float, gate: str) -> bool:
    k, d_j, d_k = _nearest_rival(protos, x, j)
    if gate == "misclassified_only" and d_j < d_k:
        return False
    if lr == 0:
        return False
    _, up_j, up_k = glvq_updates(x, protos[j], protos[k])
    for i, up in ((j, up_j), (k, up_k)):
        w = protos[i] + lr * up
        protos[i] = w / np.linalg.norm(w)
    return True


def glvq_step(protos: PrototypeSet, x: np.ndarray, label: str, lr: float,
              gate: str = "misclassified_only") -> PrototypeSet:
    """One GLVQ update for sample ``x``; returns a new prototype set.

    Only the correct-class prototype and the nearest other-class prototype
    move, and both are re-normalised to unit length.
    """
    out = protos.copy()
    _step_inplace(out.prototypes, np.asarray(x, dtype=np.float64), protos.index(label), lr, gate)
    return out


def count_misclassified(protos: PrototypeSet, X: np.ndarray, y_idx: np.ndarray) -> int:
    d = (np.sum(X**2, axis=1)[:, None] - 2.0 * X @ protos.prototypes.T
         + np.sum(protos.prototypes**2, axis=1)[None, :])
    d_true = d[np.arange(len(X)), y_idx].copy()
    d[np.arange(len(X)), y_idx] = np.inf
    return int(np.sum(d_true >= d.min(axis=1)))


def epoch_order(shuffle_seed: int, epoch: int, n: int) -> np.ndarray:
    return np.argsort(raw_stream([shuffle_seed, epoch], n), kind="stable")


EvalHook = Callable[[PrototypeSet], tuple[float, float, float]]


def train(protos: PrototypeSet, X: np.ndarray, labels: Sequence[str], cfg: GlvqConfig = GlvqConfig(),
          eval_hook: EvalHook | None = None) -> tuple[PrototypeSet, list[EpochStats]]:
    """Refine ``protos`` on unit-normalised context vectors ``X``.

    Each epoch visits the samples in an order fixed by
    ``(cfg.shuffle_seed, epoch)``. Stats are recorded for epoch 0 (the
    centroid classifier) and after every epoch; ``eval_hook`` supplies
    test Top-1/5/10 when given.
    """
    protos = protos.copy()
    X = unit(X)
    y_idx = np.array([protos.index(lab) for lab in labels], dtype=np.intp)

    def stats(epoch: int) -> EpochStats:
        tops = eval_hook(protos) if eval_hook is not None else (float("nan"),) * 3
        return EpochStats(epoch, count_misclassified(protos, X, y_idx), *tops)

    history = [stats(0)]
    lr = cfg.learning_rate
    for epoch in range(1, cfg.epochs + 1):
        for i in epoch_order(cfg.shuffle_seed, epoch, len(X)):
            _step_inplace(protos.prototypes, X[i], y_idx[i], lr, cfg.update_gate)
        lr *= cfg.lr_decay
        history.append(stats(epoch))
    return protos, history

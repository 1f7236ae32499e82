"""Cosine ranking, Top-k accuracy and information-gain metrics."""

from __future__ import annotations

import csv
import math
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from .vsa import ZeroNormError


class UnclassifiableError(ValueError):
    """The test vector is all zeros (e.g. silence under energy weighting)."""


@dataclass(frozen=True)
class Ranking:
    """Speakers by descending cosine score; equal scores by ascending id."""

    labels: tuple[str, ...]
    scores: np.ndarray = field(repr=False)

    def top(self, k: int) -> list[tuple[str, float]]:
        return [(lab, float(s)) for lab, s in zip(self.labels[:k], self.scores[:k])]

    def rank_of(self, label: str) -> int:
        """Zero-based position of ``label``."""
        return self.labels.index(label)


def _label_order(labels: Sequence[str]) -> np.ndarray:
    order = np.empty(len(labels), dtype=np.intp)
    order[np.argsort(np.array(labels, dtype=object), kind="stable")] = np.arange(len(labels))
    return order


def cosine_scores(test_vecs: np.ndarray, prototypes: np.ndarray) -> np.ndarray:
    """Cosine matrix between ``(n, D)`` test vectors and ``(S, D)`` prototypes."""
    T = np.atleast_2d(np.asarray(test_vecs, dtype=np.float64))
    P = np.asarray(prototypes, dtype=np.float64)
    if T.shape[1] != P.shape[1]:
        raise ValueError(f"dimension mismatch: {T.shape[1]} vs {P.shape[1]}")
    tn = np.linalg.norm(T, axis=1)
    pn = np.linalg.norm(P, axis=1)
    if np.any(tn == 0):
        raise UnclassifiableError("test vector has zero norm")
    if np.any(pn == 0):
        raise ZeroNormError("a prototype has zero norm")
    return (T / tn[:, None]) @ (P / pn[:, None]).T


def rank_scores(scores: np.ndarray, labels: Sequence[str], _order: np.ndarray | None = None) -> Ranking:
    order = _label_order(labels) if _order is None else _order
    idx = np.lexsort((order, -scores))
    return Ranking(tuple(labels[i] for i in idx), scores[idx])


def classify(test_vec: np.ndarray, protos) -> Ranking:
    """Rank every speaker of ``protos`` (a PrototypeSet) against ``test_vec``."""
    scores = cosine_scores(test_vec, protos.prototypes)[0]
    return rank_scores(scores, protos.labels)


def classify_many(test_vecs: np.ndarray, protos) -> list[Ranking]:
    scores = cosine_scores(test_vecs, protos.prototypes)
    order = _label_order(protos.labels)
    return [rank_scores(row, protos.labels, order) for row in scores]


def topk_accuracy(rankings: Sequence[Ranking], true_labels: Sequence[str], k: int) -> float:
    if k < 1:
        raise ValueError("k must be >= 1")
    if not rankings:
        raise ValueError("empty test set")
    hits = sum(lab in r.labels[:k] for r, lab in zip(rankings, true_labels, strict=True))
    return hits / len(rankings)


def mutual_information(p: float, n_speakers: int) -> float:
    """Bits of speaker identity conveyed by a classifier with Top-1 accuracy ``p``.

    Assumes uniform speakers and errors spread evenly over the other
    ``n_speakers - 1`` classes::

        I = log2(n) - [p log2(1/p) + (1 - p) log2((n - 1) / (1 - p))]
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"accuracy must be in [0, 1], got {p}")
    if n_speakers < 2:
        raise ValueError("need at least two speakers")
    h_cond = 0.0
    if p > 0:
        h_cond += p * math.log2(1.0 / p)
    if p < 1:
        h_cond += (1.0 - p) * math.log2((n_speakers - 1) / (1.0 - p))
    return math.log2(n_speakers) - h_cond


def training_efficiency(active_params: float, train_time: float, info_bits: float) -> float:
    """Training cost per bit of information gain (parameter-seconds per bit)."""
    if not info_bits > 0:
        raise ValueError(f"information gain must be positive, got {info_bits}")
    return active_params * train_time / info_bits


def profile_correlation_matrix(profiles: np.ndarray) -> np.ndarray:
    P = np.asarray(profiles, dtype=np.float64)
    if P.ndim != 2 or len(P) < 2:
        raise ValueError("need at least two profiles")
    n = np.linalg.norm(P, axis=1)
    if np.any(n == 0):
        raise ZeroNormError("a profile has zero norm")
    U = P / n[:, None]
    C = np.clip(U @ U.T, -1.0, 1.0)
    C = (C + C.T) / 2.0
    np.fill_diagonal(C, 1.0)
    return C


def mean_off_diagonal(C: np.ndarray) -> float:
    mask = ~np.eye(len(C), dtype=bool)
    return float(C[mask].mean())


def write_matrix_csv(path, C: np.ndarray, labels: Sequence[str]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["speaker", *labels])
        for lab, row in zip(labels, C):
            w.writerow([lab, *(f"{v:.6f}" for v in row)])


@dataclass
class EvalReport:
    top1: float
    top5: float
    top10: float
    n_test: int
    n_speakers: int
    mutual_info_bits: float
    efficiency: float | None = None
    latency_ms_per_s: float | None = None
    confusions: list[tuple[str, str]] = field(default_factory=list)

    @classmethod
    def from_rankings(cls, rankings: Sequence[Ranking], true_labels: Sequence[str], n_speakers: int,
                      active_params: int | None = None, train_time: float | None = None,
                      latency_ms_per_s: float | None = None) -> EvalReport:
        tops = [topk_accuracy(rankings, true_labels, k) for k in (1, 5, 10)]
        mi = mutual_information(tops[0], n_speakers)
        eff = None
        if active_params is not None and train_time is not None and mi > 0:
            eff = training_efficiency(active_params, train_time, mi)
        confusions = [(lab, r.labels[0]) for r, lab in zip(rankings, true_labels) if r.labels[0] != lab]
        return cls(*tops, len(rankings), n_speakers, mi, eff, latency_ms_per_s, confusions)

    def table(self) -> str:
        lines = [
            f"test items        {self.n_test}",
            f"speakers          {self.n_speakers}",
            f"Top-1             {self.top1:.3f}",
            f"Top-5             {self.top5:.3f}",
            f"Top-10            {self.top10:.3f}",
            f"mutual info       {self.mutual_info_bits:.2f} bits",
        ]
        if self.efficiency is not None:
            lines.append(f"train cost / bit  {self.efficiency:.3e} param*s/bit")
        if self.latency_ms_per_s is not None:
            lines.append(f"latency           {self.latency_ms_per_s:.2f} ms per 1 s of audio")
        return "\n".join(lines)

    def as_dict(self) -> dict:
        return {
            "top1": self.top1, "top5": self.top5, "top10": self.top10,
            "n_test": self.n_test, "n_speakers": self.n_speakers,
            "mutual_info_bits": self.mutual_info_bits, "efficiency": self.efficiency,
            "latency_ms_per_s": self.latency_ms_per_s, "n_confusions": len(self.confusions),
        }

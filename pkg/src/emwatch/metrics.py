"""Confusion matrices and recall/precision/F1, binary and micro-averaged
over a label subset (one-vs-rest counts pooled before the ratio)."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import EmptySubset, LabelOutOfRange, LengthMismatch, NoPositives


@dataclass(frozen=True)
class ConfusionMatrix:
    """Row = truth, column = prediction."""
    counts: np.ndarray

    @property
    def n_classes(self) -> int:
        return self.counts.shape[0]

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def to_lists(self) -> list:
        return self.counts.astype(int).tolist()


def confusion(preds: Sequence[int], truths: Sequence[int], n_classes: int) -> ConfusionMatrix:
    preds = np.asarray(preds, dtype=np.int64)
    truths = np.asarray(truths, dtype=np.int64)
    if preds.shape != truths.shape:
        raise LengthMismatch(f"{preds.size} predictions vs {truths.size} truths")
    if preds.size and (
        preds.min() < 0 or truths.min() < 0 or preds.max() >= n_classes or truths.max() >= n_classes
    ):
        raise LabelOutOfRange(f"labels must lie in [0, {n_classes})")
    counts = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(counts, (truths, preds), 1)
    return ConfusionMatrix(counts=counts)


def recall_binary(cm: ConfusionMatrix) -> float:
    """TP / (TP + FN) for class 1 of a 2-class matrix."""
    if cm.n_classes != 2:
        raise LabelOutOfRange(f"expected a 2-class matrix, got {cm.n_classes}")
    tp = int(cm.counts[1, 1])
    fn = int(cm.counts[1, 0])
    if tp + fn == 0:
        raise NoPositives("no positive samples in the matrix")
    return tp / (tp + fn)


def micro_metrics(cm: ConfusionMatrix, label_subset: Iterable[int]) -> dict:
    """Pool one-vs-rest TP/FN/FP over the subset, then compute recall,
    precision and F1. Zero-denominator metrics come back as 0 with a flag."""
    subset = sorted(set(int(c) for c in label_subset))
    if not subset:
        raise EmptySubset("label subset must be non-empty")
    if subset[0] < 0 or subset[-1] >= cm.n_classes:
        raise LabelOutOfRange(f"subset {subset} outside [0, {cm.n_classes})")
    tp = fn = fp = 0
    for c in subset:
        tp += int(cm.counts[c, c])
        fn += int(cm.counts[c, :].sum() - cm.counts[c, c])
        fp += int(cm.counts[:, c].sum() - cm.counts[c, c])
    undefined = []
    if tp + fn > 0:
        recall = tp / (tp + fn)
    else:
        recall, undefined = 0.0, undefined + ["recall"]
    if tp + fp > 0:
        precision = tp / (tp + fp)
    else:
        precision, undefined = 0.0, undefined + ["precision"]
    if precision + recall > 0:
        f1 = 2.0 * precision * recall / (precision + recall)
    else:
        f1, undefined = 0.0, undefined + ["f1"]
    return {
        "recall": recall,
        "precision": precision,
        "f1": f1,
        "tp": tp,
        "fp": fp,
        "fn": fn,
        "undefined": undefined,
    }


def emergency_counts(preds: np.ndarray, truths: np.ndarray, emergency: int = 1) -> tuple[int, int]:
    """(FP, FN) of the emergency class over pooled frames."""
    fp = int(np.sum((preds == emergency) & (truths != emergency)))
    fn = int(np.sum((truths == emergency) & (preds != emergency)))
    return fp, fn

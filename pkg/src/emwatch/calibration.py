"""Decision-threshold optimization.

Binary streams get the Youden's-J cut on the emergency probability; 3-class
streams get a grid scan of the emergency override threshold (argmax unless the
emergency probability reaches t). Both keep the full objective curve so the
choice can be exported and inspected.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import NoEmergencySamples, NonFiniteInput, SingleClass

EMERGENCY = 1

# emergency-threshold scan: 0.000, 0.001, ..., 0.499
GRID_START = 0.0
GRID_STOP = 0.5
GRID_STEP = 0.001


def threshold_grid() -> np.ndarray:
    return np.arange(GRID_START, GRID_STOP, GRID_STEP)


@dataclass(frozen=True)
class Calibration:
    """mode 'binary' or 'multiclass'; threshold None means plain argmax."""
    mode: str
    threshold: Optional[float] = None
    curve: tuple = ()        # (threshold, objective) pairs
    roc: tuple = ()          # (fpr, tpr) pairs, binary mode only

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "threshold": self.threshold,
            "curve": [[t, obj] for t, obj in self.curve],
            "roc": [[fpr, tpr] for fpr, tpr in self.roc],
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "Calibration":
        return cls(
            mode=payload["mode"],
            threshold=payload["threshold"],
            curve=tuple((float(t), float(o)) for t, o in payload.get("curve", [])),
            roc=tuple((float(a), float(b)) for a, b in payload.get("roc", [])),
        )


ARGMAX_CALIBRATION = Calibration(mode="multiclass", threshold=None)


def softmax(scores: np.ndarray) -> np.ndarray:
    """Stable softmax of one score vector."""
    scores = np.asarray(scores, dtype=np.float64)
    if not np.all(np.isfinite(scores)):
        raise NonFiniteInput(f"scores contain non-finite values: {scores}")
    shifted = scores - scores.max()
    e = np.exp(shifted)
    return e / e.sum()


def softmax_rows(scores: np.ndarray) -> np.ndarray:
    scores = np.asarray(scores, dtype=np.float64)
    if not np.all(np.isfinite(scores)):
        raise NonFiniteInput("scores contain non-finite values")
    shifted = scores - scores.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def youden_threshold(probs: Sequence[float], labels: Sequence[int]) -> Calibration:
    """Binary cut maximizing J = sensitivity + specificity - 1 over candidate
    thresholds (midpoints of adjacent distinct probabilities plus {0, 1});
    a sample is positive when its probability is >= the threshold.
    Ties resolve to the smallest threshold, which favors recall."""
    probs = np.asarray(probs, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    pos = labels == EMERGENCY
    n = probs.size
    n_pos = int(pos.sum())
    n_neg = n - n_pos
    if n_pos == 0 or n_neg == 0:
        raise SingleClass("both classes must be present to place a threshold")
    distinct = np.unique(probs)
    candidates = np.concatenate([[0.0], (distinct[:-1] + distinct[1:]) / 2.0, [1.0]])
    # suffix counts over sorted probabilities instead of an O(n) pass per candidate
    order = np.argsort(probs, kind="stable")
    sorted_probs = probs[order]
    pos_prefix = np.concatenate([[0], np.cumsum(pos[order])])
    idx = np.searchsorted(sorted_probs, candidates, side="left")
    tp = n_pos - pos_prefix[idx]
    fp = (n - idx) - tp
    sensitivity = tp / n_pos
    specificity = (n_neg - fp) / n_neg
    j = sensitivity + specificity - 1.0
    best = int(np.argmax(j))  # candidates ascend, so the first max is the smallest t
    return Calibration(
        mode="binary",
        threshold=float(candidates[best]),
        curve=tuple(zip(candidates.tolist(), j.tolist())),
        roc=tuple(zip((1.0 - specificity).tolist(), sensitivity.tolist())),
    )


def emergency_threshold(scores: Sequence, labels: Sequence[int]) -> Calibration:
    """Scan t over {0, 0.001, ..., 0.499}: predict argmax unless the emergency
    softmax probability reaches t, then score the emergency-class micro F1.
    Returns the first argmax of the scan."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if not np.any(labels == EMERGENCY):
        raise NoEmergencySamples("no emergency frames in the calibration data")
    probs = softmax_rows(scores)
    argmax_is_e = np.argmax(probs, axis=1) == EMERGENCY
    p_emergency = probs[:, EMERGENCY]
    truth_pos = labels == EMERGENCY
    grid = threshold_grid()
    # a sample is predicted emergency iff its argmax already says so or
    # p_emergency >= t; both populations reduce to suffix counts over sorted p
    def count_ge(values: np.ndarray) -> np.ndarray:
        return values.size - np.searchsorted(np.sort(values), grid, side="left")

    tp = int(np.sum(argmax_is_e & truth_pos)) + count_ge(p_emergency[~argmax_is_e & truth_pos])
    fp = int(np.sum(argmax_is_e & ~truth_pos)) + count_ge(p_emergency[~argmax_is_e & ~truth_pos])
    fn = int(truth_pos.sum()) - tp
    denom = 2 * tp + fp + fn
    f1 = np.divide(2.0 * tp, denom, out=np.zeros_like(grid), where=denom > 0)
    best = int(np.argmax(f1))  # first maximum, i.e. the smallest threshold
    return Calibration(
        mode="multiclass",
        threshold=float(grid[best]),
        curve=tuple(zip(grid.tolist(), f1.tolist())),
    )


def classify_with_threshold(probs: np.ndarray, calibration: Optional[Calibration]) -> int:
    """Apply the calibrated decision rule to one probability vector."""
    probs = np.asarray(probs, dtype=np.float64)
    if calibration is None or calibration.threshold is None:
        return int(np.argmax(probs))
    if calibration.mode == "binary":
        return EMERGENCY if probs[EMERGENCY] >= calibration.threshold else 1 - EMERGENCY
    if probs[EMERGENCY] >= calibration.threshold:
        return EMERGENCY
    return int(np.argmax(probs))


def classify_rows(probs: np.ndarray, calibration: Optional[Calibration]) -> np.ndarray:
    """Vectorized classify_with_threshold over rows."""
    probs = np.asarray(probs, dtype=np.float64)
    argmaxes = np.argmax(probs, axis=1)
    if calibration is None or calibration.threshold is None:
        return argmaxes
    hit = probs[:, EMERGENCY] >= calibration.threshold
    if calibration.mode == "binary":
        return np.where(hit, EMERGENCY, 1 - EMERGENCY)
    return np.where(hit, EMERGENCY, argmaxes)


# --- persistence / export ------------------------------------------------------

def save_calibration(calibration: Calibration, path: str | Path) -> None:
    Path(path).write_text(json.dumps(calibration.to_dict(), sort_keys=True))


def load_calibration(path: str | Path) -> Calibration:
    return Calibration.from_dict(json.loads(Path(path).read_text()))


def export_curve_csv(calibration: Calibration, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["threshold", "objective"])
        for t, obj in calibration.curve:
            writer.writerow([repr(t), repr(obj)])


def export_roc_csv(calibration: Calibration, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["fpr", "tpr"])
        for fpr, tpr in calibration.roc:
            writer.writerow([repr(fpr), repr(tpr)])

"""Temporal post-processing of per-frame classifications.

A new class must persist for n_d consecutive frames before the stream commits
to it; delay-window frames keep the previously committed class. n_d is 1 for a
zero delay and 1 + ceil(delay_ms / frame_period_ms) otherwise, so a 10 ms
delay at a 100 ms frame period defers an emergency by exactly one frame.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .data import ClassLabel
from .errors import NoEmergencyTruth

EMERGENCY = int(ClassLabel.EMERGENCY)
NO_LABEL = -1

DELAY_GRID_MS = tuple(range(0, 1501, 10))  # 151 candidates


def required_persistence(delay_ms: int, frame_period_ms: int) -> int:
    if delay_ms < 0:
        raise ValueError("delay_ms must be >= 0")
    if delay_ms == 0:
        return 1
    return 1 + math.ceil(delay_ms / frame_period_ms)


@dataclass(frozen=True)
class DelayFilter:
    delay_ms: int
    frame_period_ms: int
    committed: int = int(ClassLabel.NORMAL)
    pending_label: Optional[int] = None
    pending_count: int = 0

    @property
    def n_d(self) -> int:
        return required_persistence(self.delay_ms, self.frame_period_ms)


def delay_filter_step(filt: DelayFilter, raw: int) -> tuple[DelayFilter, int]:
    """Advance the filter by one frame; returns the committed label."""
    raw = int(raw)
    if raw == filt.committed:
        if filt.pending_label is not None:
            filt = replace(filt, pending_label=None, pending_count=0)
        return filt, filt.committed
    if raw == filt.pending_label:
        count = filt.pending_count + 1
    else:
        count = 1
    if count >= filt.n_d:
        filt = replace(filt, committed=raw, pending_label=None, pending_count=0)
    else:
        filt = replace(filt, pending_label=raw, pending_count=count)
    return filt, filt.committed


def run_delay_filter(
    raw_labels: Sequence[int], delay_ms: int, frame_period_ms: int
) -> np.ndarray:
    """Committed label per frame. NO_LABEL frames (no prediction available)
    leave the filter untouched and emit the current committed label.

    Same state machine as delay_filter_step, inlined on plain ints because the
    delay grid search re-runs this millions of frames at a time."""
    n_d = required_persistence(delay_ms, frame_period_ms)
    committed = int(ClassLabel.NORMAL)
    pending_label = None
    pending_count = 0
    if isinstance(raw_labels, np.ndarray):
        raw_labels = raw_labels.tolist()
    out = np.empty(len(raw_labels), dtype=np.int64)
    for i, raw in enumerate(raw_labels):
        if raw == NO_LABEL:
            out[i] = committed
            continue
        if raw == committed:
            pending_label = None
            pending_count = 0
        else:
            pending_count = pending_count + 1 if raw == pending_label else 1
            pending_label = raw
            if pending_count >= n_d:
                committed = raw
                pending_label = None
                pending_count = 0
        out[i] = committed
    return out


def _emergency_f1(preds: np.ndarray, truths: np.ndarray) -> tuple[float, int, int]:
    pred_pos = preds == EMERGENCY
    truth_pos = truths == EMERGENCY
    tp = int(np.sum(pred_pos & truth_pos))
    fp = int(np.sum(pred_pos & ~truth_pos))
    fn = int(np.sum(~pred_pos & truth_pos))
    f1 = 2.0 * tp / (2.0 * tp + fp + fn) if (2 * tp + fp + fn) > 0 else 0.0
    return f1, fp, fn


def optimize_delay(
    streams: Sequence[tuple], frame_period_ms: int
) -> tuple[int, list]:
    """Scan d over 0..1500 ms in 10 ms steps and keep the argmax of pooled
    emergency micro F1 (committed vs truth over every labeled frame of every
    stream). ``streams`` holds (raw_predictions, truth_labels) pairs per video.
    Ties resolve to the smallest delay. Also returns the (d, f1, fp, fn) curve."""
    streams = [
        (np.asarray(raw, dtype=np.int64), np.asarray(truth, dtype=np.int64))
        for raw, truth in streams
    ]
    if not any(np.any(truth == EMERGENCY) for _, truth in streams):
        raise NoEmergencyTruth("no emergency frames in any training stream")
    best_d, best_f1 = None, -np.inf
    curve = []
    for d in DELAY_GRID_MS:
        committed_all = []
        truth_all = []
        for raw, truth in streams:
            committed = run_delay_filter(raw, d, frame_period_ms)
            labeled = truth != NO_LABEL
            committed_all.append(committed[labeled])
            truth_all.append(truth[labeled])
        f1, fp, fn = _emergency_f1(np.concatenate(committed_all), np.concatenate(truth_all))
        curve.append((d, f1, fp, fn))
        if f1 > best_f1:
            best_d, best_f1 = d, f1
    return best_d, curve


@dataclass(frozen=True)
class EmergencyEvent:
    video_id: str
    trigger_timestamp_ms: int
    first_raw_timestamp_ms: int

    def to_dict(self) -> dict:
        return {
            "video": self.video_id,
            "trigger_ms": self.trigger_timestamp_ms,
            "first_raw_ms": self.first_raw_timestamp_ms,
        }


def detect_events(
    timestamps: Sequence[int],
    raw_labels: Sequence[int],
    committed_labels: Sequence[int],
    video_id: str,
) -> list[EmergencyEvent]:
    """One event per maximal committed-emergency run; the event also records
    the first raw-emergency frame of the pending run that caused the commit."""
    timestamps = np.asarray(timestamps, dtype=np.int64)
    raw_labels = np.asarray(raw_labels, dtype=np.int64)
    committed = np.asarray(committed_labels, dtype=np.int64)
    events = []
    for i in range(committed.size):
        if committed[i] != EMERGENCY or (i > 0 and committed[i - 1] == EMERGENCY):
            continue
        j = i
        while j > 0 and raw_labels[j - 1] == EMERGENCY:
            j -= 1
        events.append(
            EmergencyEvent(
                video_id=video_id,
                trigger_timestamp_ms=int(timestamps[i]),
                first_raw_timestamp_ms=int(timestamps[j]),
            )
        )
    return events


def stability_latency(
    timestamps: Sequence[int],
    raw_labels: Sequence[int],
    truth_labels: Sequence[int],
) -> dict:
    """Per truth-emergency event: time from onset to the first raw-emergency
    frame after which the prediction stays emergency for the rest of the event.
    Events with no such frame count as undetected."""
    timestamps = np.asarray(timestamps, dtype=np.int64)
    raw = np.asarray(raw_labels, dtype=np.int64)
    truth = np.asarray(truth_labels, dtype=np.int64)
    latencies = []
    undetected = 0
    i = 0
    n = truth.size
    while i < n:
        if truth[i] != EMERGENCY:
            i += 1
            continue
        start = i
        while i < n and truth[i] == EMERGENCY:
            i += 1
        end = i  # exclusive
        stable_from = end
        for k in range(end - 1, start - 1, -1):
            if raw[k] == EMERGENCY:
                stable_from = k
            else:
                break
        if stable_from == end:
            undetected += 1
            continue
        latencies.append(float(timestamps[stable_from] - timestamps[start]))
    return {
        "latencies_ms": latencies,
        "mean_ms": float(np.mean(latencies)) if latencies else 0.0,
        "std_ms": float(np.std(latencies)) if latencies else 0.0,
        "max_ms": float(np.max(latencies)) if latencies else 0.0,
        "detected_count": len(latencies),
        "undetected_count": undetected,
    }


# --- export ----------------------------------------------------------------------

def export_delay_curve_csv(curve: Sequence[tuple], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["d_ms", "f1", "fp", "fn"])
        for d, f1, fp, fn in curve:
            writer.writerow([d, repr(f1), fp, fn])


def write_event_log(events: Sequence[EmergencyEvent], path: str | Path) -> None:
    with open(path, "w") as fh:
        for event in events:
            fh.write(json.dumps(event.to_dict(), sort_keys=True) + "\n")

"""Fixed-length feature encoding of one patient skeleton.

Each of the 25 keypoints contributes (x_rel, y_rel, depth_rel, confidence):
coordinates are translated so the neck (or the visible-keypoint centroid) is
the origin and scaled by torso length, depth is offset against the patient's
median depth. Missing keypoints contribute an all-zero block, so the
confidence channel doubles as a validity mask.
"""
from __future__ import annotations

import csv
import math
from pathlib import Path
from typing import Iterable

import numpy as np

from .data import MID_HIP, NECK, NUM_KEYPOINTS, Skeleton
from .errors import NotEnoughKeypoints
from .tracking import PatientFrame

FEATURES_PER_KEYPOINT = 4
N_FEATURES = NUM_KEYPOINTS * FEATURES_PER_KEYPOINT  # 100

_MIN_SCALE = 1e-9


def _reference_point(skeleton: Skeleton, visible: list[int]) -> tuple:
    neck = skeleton.keypoints[NECK]
    if not neck.missing:
        return (neck.x_px, neck.y_px)
    xs = [skeleton.keypoints[i].x_px for i in visible]
    ys = [skeleton.keypoints[i].y_px for i in visible]
    return (sum(xs) / len(xs), sum(ys) / len(ys))


def _scale(skeleton: Skeleton, visible: list[int]) -> float:
    neck = skeleton.keypoints[NECK]
    hip = skeleton.keypoints[MID_HIP]
    if not neck.missing and not hip.missing:
        torso = math.hypot(neck.x_px - hip.x_px, neck.y_px - hip.y_px)
        if torso > _MIN_SCALE:
            return torso
    xs = [skeleton.keypoints[i].x_px for i in visible]
    ys = [skeleton.keypoints[i].y_px for i in visible]
    diagonal = math.hypot(max(xs) - min(xs), max(ys) - min(ys))
    return diagonal if diagonal > _MIN_SCALE else 1.0


def extract_features(patient: PatientFrame) -> np.ndarray:
    """Encode a PatientFrame as a length-100 vector. Needs at least two
    visible keypoints, otherwise raises NotEnoughKeypoints."""
    skeleton = patient.skeleton
    visible = skeleton.visible()
    if len(visible) < 2:
        raise NotEnoughKeypoints(
            f"{len(visible)} visible keypoint(s); need at least 2 to normalize"
        )
    ref_x, ref_y = _reference_point(skeleton, visible)
    scale = _scale(skeleton, visible)
    depths = [kp.depth_m for kp in skeleton.keypoints if not kp.missing and kp.depth_m is not None]
    median_depth = float(np.median(depths)) if depths else None

    values = np.zeros(N_FEATURES, dtype=np.float64)
    for i, kp in enumerate(skeleton.keypoints):
        if kp.missing:
            continue
        base = i * FEATURES_PER_KEYPOINT
        values[base] = (kp.x_px - ref_x) / scale
        values[base + 1] = (kp.y_px - ref_y) / scale
        if kp.depth_m is not None and median_depth is not None:
            values[base + 2] = kp.depth_m - median_depth
        values[base + 3] = kp.confidence
    if not np.all(np.isfinite(values)):
        raise NotEnoughKeypoints("feature vector contains non-finite entries")
    return values


def export_features_csv(path: str | Path, rows: Iterable[tuple]) -> None:
    """Debug dump: one row per frame as (video_id, timestamp_ms, label, *features)."""
    header = ["video_id", "t_ms", "label"] + [
        f"kp{i}_{ch}" for i in range(NUM_KEYPOINTS) for ch in ("x", "y", "d", "c")
    ]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for video_id, t_ms, label, vec in rows:
            writer.writerow([video_id, t_ms, label] + [repr(float(v)) for v in vec])

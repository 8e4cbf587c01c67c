"""Patient selection among detected skeletons and per-keypoint depth fusion.

The tracker is a nearest-neighbor associator with a gating radius: a marker,
when visible, always wins; otherwise the skeleton whose torso center is
closest to the last locked position is kept and everything else is discarded.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .data import (
    IMAGE_HEIGHT,
    IMAGE_WIDTH,
    TORSO_JOINTS,
    ClassLabel,
    Keypoint,
    PoseFrame,
    Skeleton,
)
from .errors import OutOfBounds

DEFAULT_GATE_PX = 150.0
DEFAULT_LOCK_TIMEOUT_MS = 2000


@dataclass(frozen=True)
class TrackState:
    last_center_px: Optional[tuple] = None
    last_seen_ms: Optional[int] = None
    lock_timeout_ms: int = DEFAULT_LOCK_TIMEOUT_MS
    gate_px: float = DEFAULT_GATE_PX


@dataclass(frozen=True)
class PatientFrame:
    timestamp_ms: int
    skeleton: Skeleton
    label: Optional[ClassLabel]


def torso_center(skeleton: Skeleton) -> tuple:
    """Mean of the visible torso joints; falls back to all visible keypoints."""
    pts = [skeleton.keypoints[i] for i in TORSO_JOINTS if not skeleton.keypoints[i].missing]
    if not pts:
        pts = [kp for kp in skeleton.keypoints if not kp.missing]
    xs = sum(kp.x_px for kp in pts) / len(pts)
    ys = sum(kp.y_px for kp in pts) / len(pts)
    return (xs, ys)


def bounding_box(skeleton: Skeleton) -> tuple:
    """(x_min, y_min, x_max, y_max) over visible keypoints."""
    xs = [kp.x_px for kp in skeleton.keypoints if not kp.missing]
    ys = [kp.y_px for kp in skeleton.keypoints if not kp.missing]
    return (min(xs), min(ys), max(xs), max(ys))


def _dist(a: tuple, b: tuple) -> float:
    return math.hypot(a[0] - b[0], a[1] - b[1])


def _box_distance(box: tuple, point: tuple) -> float:
    """Distance from a point to a box, zero when the point lies inside."""
    x0, y0, x1, y1 = box
    dx = max(x0 - point[0], 0.0, point[0] - x1)
    dy = max(y0 - point[1], 0.0, point[1] - y1)
    return math.hypot(dx, dy)


def _select_by_marker(frame: PoseFrame) -> Skeleton:
    # containment wins; among containers (or when none contains), nearest box
    return min(frame.skeletons, key=lambda sk: _box_distance(bounding_box(sk), frame.marker_px))


def select_patient(frame: PoseFrame, state: TrackState) -> tuple[Optional[PatientFrame], TrackState]:
    """Pick the tracked patient's skeleton from a frame, or nothing.

    Marker precedence, then gated nearest-neighbor on the torso center, then
    (no lock or lock expired) the skeleton nearest the image center.
    """
    lock_expired = (
        state.last_seen_ms is not None
        and frame.timestamp_ms - state.last_seen_ms > state.lock_timeout_ms
    )
    if not frame.skeletons:
        if lock_expired:
            state = replace(state, last_center_px=None, last_seen_ms=None)
        return None, state

    if frame.marker_px is not None:
        chosen = _select_by_marker(frame)
    elif state.last_center_px is not None and not lock_expired:
        chosen = min(frame.skeletons, key=lambda sk: _dist(torso_center(sk), state.last_center_px))
        if _dist(torso_center(chosen), state.last_center_px) > state.gate_px:
            return None, state
    else:
        image_center = (IMAGE_WIDTH / 2.0, IMAGE_HEIGHT / 2.0)
        chosen = min(frame.skeletons, key=lambda sk: _dist(torso_center(sk), image_center))

    new_state = replace(
        state, last_center_px=torso_center(chosen), last_seen_ms=frame.timestamp_ms
    )
    return PatientFrame(frame.timestamp_ms, chosen, frame.label), new_state


# --- depth fusion ---------------------------------------------------------------

@dataclass(frozen=True)
class DepthMap:
    """Row-major depth grid in meters; non-positive or non-finite cells are holes."""
    values: np.ndarray  # shape (height, width), float32/float64

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]


DEPTH_WINDOW = 5  # median window side length, pixels


def fuse_depth(skeleton: Skeleton, depth_map: DepthMap) -> Skeleton:
    """Attach to each visible keypoint the median of valid depths in a 5x5
    window around its pixel; holes are excluded, all-hole windows yield no depth."""
    half = DEPTH_WINDOW // 2
    grid = depth_map.values
    fused = []
    for kp in skeleton.keypoints:
        if kp.missing:
            fused.append(kp)
            continue
        col = int(round(kp.x_px))
        row = int(round(kp.y_px))
        if not (0 <= col < depth_map.width and 0 <= row < depth_map.height):
            raise OutOfBounds(
                f"keypoint ({kp.x_px:.1f}, {kp.y_px:.1f}) outside {depth_map.width}x{depth_map.height} depth map"
            )
        window = grid[
            max(row - half, 0):row + half + 1,
            max(col - half, 0):col + half + 1,
        ]
        valid = window[np.isfinite(window) & (window > 0)]
        depth = float(np.median(valid)) if valid.size else None
        fused.append(Keypoint(kp.x_px, kp.y_px, kp.confidence, depth))
    return Skeleton(keypoints=tuple(fused), person_index=skeleton.person_index)


# binary grid interface: int32 width, int32 height, float32 hole sentinel,
# then height*width float32 row-major values
def read_depth_map(path) -> DepthMap:
    raw = np.fromfile(path, dtype=np.uint8)
    if raw.size < 12:
        raise OutOfBounds("depth map file too short for header")
    width, height = np.frombuffer(raw[:8].tobytes(), dtype=np.int32)
    sentinel = float(np.frombuffer(raw[8:12].tobytes(), dtype=np.float32)[0])
    body = np.frombuffer(raw[12:].tobytes(), dtype=np.float32)
    if body.size != width * height:
        raise OutOfBounds(f"depth map body holds {body.size} cells, header says {width * height}")
    values = body.reshape(height, width).astype(np.float64)
    values[values == sentinel] = np.nan
    return DepthMap(values=values)


def write_depth_map(path, depth_map: DepthMap, hole_sentinel: float = -1.0) -> None:
    values = depth_map.values.astype(np.float32)
    values = np.where(np.isfinite(values) & (values > 0), values, np.float32(hole_sentinel))
    with open(path, "wb") as fh:
        fh.write(np.array([depth_map.width, depth_map.height], dtype=np.int32).tobytes())
        fh.write(np.array([hole_sentinel], dtype=np.float32).tobytes())
        fh.write(values.tobytes())

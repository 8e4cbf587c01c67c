"""Seeded synthetic keypoint-stream generator.

Scenes are minimal 2.5D kinematics: a 25-keypoint template posed in the pixel
plane plus a scalar per-person depth. Upright and prone frames differ in
normalized neck-to-hip verticality by a wide margin, so noise-free scenarios
are separable by construction.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .data import (
    IMAGE_HEIGHT,
    IMAGE_WIDTH,
    L_ANKLE,
    L_BIG_TOE,
    L_EAR,
    L_ELBOW,
    L_EYE,
    L_HEEL,
    L_HIP,
    L_KNEE,
    L_SHOULDER,
    L_SMALL_TOE,
    L_WRIST,
    MID_HIP,
    NECK,
    NOSE,
    NUM_KEYPOINTS,
    R_ANKLE,
    R_BIG_TOE,
    R_EAR,
    R_ELBOW,
    R_EYE,
    R_HEEL,
    R_HIP,
    R_KNEE,
    R_SHOULDER,
    R_SMALL_TOE,
    R_WRIST,
    ClassLabel,
    Dataset,
    Keypoint,
    Mode,
    MISSING_KEYPOINT,
    PoseFrame,
    Skeleton,
    VideoSequence,
)
from .errors import InvalidSpec

KINDS = (
    "walk",
    "fall_during_walk",
    "sit_wheelchair",
    "slump_unconscious",
    "stand_up_pause",
    "bystanders",
)

_WALKING_KINDS = ("walk", "fall_during_walk", "bystanders")

# body-space template, origin at mid-hip, y up, units px
_STANDING = {
    NOSE: (0.0, 95.0), NECK: (0.0, 80.0),
    R_SHOULDER: (-18.0, 75.0), R_ELBOW: (-22.0, 45.0), R_WRIST: (-24.0, 15.0),
    L_SHOULDER: (18.0, 75.0), L_ELBOW: (22.0, 45.0), L_WRIST: (24.0, 15.0),
    MID_HIP: (0.0, 0.0),
    R_HIP: (-10.0, 0.0), R_KNEE: (-11.0, -45.0), R_ANKLE: (-12.0, -90.0),
    L_HIP: (10.0, 0.0), L_KNEE: (11.0, -45.0), L_ANKLE: (12.0, -90.0),
    R_EYE: (-4.0, 99.0), L_EYE: (4.0, 99.0), R_EAR: (-8.0, 96.0), L_EAR: (8.0, 96.0),
    L_BIG_TOE: (15.0, -98.0), L_SMALL_TOE: (18.0, -97.0), L_HEEL: (9.0, -94.0),
    R_BIG_TOE: (-15.0, -98.0), R_SMALL_TOE: (-18.0, -97.0), R_HEEL: (-9.0, -94.0),
}

# legs foreshortened, torso unchanged
_SEATED = dict(_STANDING)
_SEATED.update({
    R_KNEE: (-14.0, -28.0), R_ANKLE: (-15.0, -52.0),
    L_KNEE: (14.0, -28.0), L_ANKLE: (15.0, -52.0),
    L_BIG_TOE: (17.0, -60.0), L_SMALL_TOE: (20.0, -59.0), L_HEEL: (12.0, -56.0),
    R_BIG_TOE: (-17.0, -60.0), R_SMALL_TOE: (-20.0, -59.0), R_HEEL: (-12.0, -56.0),
})

_SWING_JOINTS = {
    R_KNEE: 4.0, L_KNEE: -4.0, R_ANKLE: 7.0, L_ANKLE: -7.0,
    R_WRIST: -6.0, L_WRIST: 6.0, R_ELBOW: -3.0, L_ELBOW: 3.0,
    R_BIG_TOE: 7.0, R_SMALL_TOE: 7.0, R_HEEL: 7.0,
    L_BIG_TOE: -7.0, L_SMALL_TOE: -7.0, L_HEEL: -7.0,
}

_HEAD_JOINTS = (NOSE, R_EYE, L_EYE, R_EAR, L_EAR)

_STAND_ANCHOR_Y = 230.0  # mid-hip image row of a standing person
_SEAT_ANCHOR_Y = 258.0


@dataclass(frozen=True)
class ScenarioSpec:
    kind: str
    duration_frames: int = 50
    noise_px: float = 0.0
    dropout_rate: float = 0.0
    seed: int = 0
    frame_period_ms: int = 100

    def validate(self) -> None:
        if self.kind not in KINDS:
            raise InvalidSpec(f"unknown scenario kind {self.kind!r}")
        if self.duration_frames < 10:
            raise InvalidSpec("duration_frames must be >= 10")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise InvalidSpec("dropout_rate must be in [0, 1)")
        if self.noise_px < 0.0:
            raise InvalidSpec("noise_px must be >= 0")
        if self.frame_period_ms <= 0:
            raise InvalidSpec("frame_period_ms must be positive")


def _pose_points(template: dict, anchor: tuple) -> dict:
    ax, ay = anchor
    return {i: (ax + dx, ay - dy) for i, (dx, dy) in template.items()}


def _rotate_about(points: dict, pivot: tuple, theta: float) -> dict:
    c, s = math.cos(theta), math.sin(theta)
    px, py = pivot
    out = {}
    for i, (x, y) in points.items():
        dx, dy = x - px, y - py
        out[i] = (px + dx * c - dy * s, py + dx * s + dy * c)
    return out


def _walk_pose(anchor_x: float, phase: float) -> dict:
    pts = dict(_STANDING)
    swing = math.sin(phase)
    for joint, amp in _SWING_JOINTS.items():
        dx, dy = pts[joint]
        pts[joint] = (dx + amp * swing, dy)
    anchor_y = _STAND_ANCHOR_Y + 2.0 * math.sin(2.0 * phase)
    return _pose_points(pts, (anchor_x, anchor_y))


def _ankle_pivot(points: dict) -> tuple:
    (rx, ry), (lx, ly) = points[R_ANKLE], points[L_ANKLE]
    return ((rx + lx) / 2.0, (ry + ly) / 2.0)


class _PersonTrack:
    """Deterministic per-person horizontal trajectory plus depth."""

    def __init__(self, base_depth: float, start_x: float, speed: float):
        self.base_depth = base_depth
        self.x = start_x
        self.speed = speed

    def step_x(self) -> float:
        self.x += self.speed
        if self.x < 80.0 or self.x > IMAGE_WIDTH - 80.0:
            self.speed = -self.speed
            self.x += 2.0 * self.speed
        return self.x


def _finish_skeleton(
    points: dict,
    rng: np.random.Generator,
    spec: ScenarioSpec,
    depth: float,
    person_index: int,
) -> Skeleton:
    keypoints = []
    for i in range(NUM_KEYPOINTS):
        x, y = points[i]
        if spec.noise_px > 0:
            x += rng.normal(0.0, spec.noise_px)
            y += rng.normal(0.0, spec.noise_px)
        conf = float(rng.uniform(0.55, 0.95))
        # neck and mid-hip stay visible so torso normalization is always defined
        dropped = (
            spec.dropout_rate > 0
            and i not in (NECK, MID_HIP)
            and rng.uniform() < spec.dropout_rate
        )
        if dropped:
            keypoints.append(MISSING_KEYPOINT)
            continue
        x = float(min(max(x, 0.0), IMAGE_WIDTH - 1.0))
        y = float(min(max(y, 0.0), IMAGE_HEIGHT - 1.0))
        kp_depth = max(0.3, depth + float(rng.normal(0.0, 0.02)))
        keypoints.append(Keypoint(x, y, conf, kp_depth))
    return Skeleton(keypoints=tuple(keypoints), person_index=person_index)


def generate_sequence(spec: ScenarioSpec) -> VideoSequence:
    """Render one scenario into a labeled VideoSequence, deterministic per seed."""
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    n = spec.duration_frames
    onset = int(n * rng.uniform(0.4, 0.6))
    transition = int(rng.integers(5, 11))  # fall/slump/rise length in frames
    patient = _PersonTrack(
        base_depth=2.0, start_x=float(rng.uniform(180, 300)), speed=float(rng.uniform(2.0, 4.0))
    )
    # tip direction alternates with seed parity so contiguous seed ranges stay balanced
    sideways = 1.0 if spec.seed % 2 == 0 else -1.0

    distractors = []
    marker_frames: set[int] = set()
    if spec.kind == "bystanders":
        marker_frames.add(0)
        for d in range(int(rng.integers(1, 5))):
            track = _PersonTrack(
                base_depth=2.8 + 0.4 * d,
                start_x=float(rng.uniform(60, IMAGE_WIDTH - 60)),
                speed=float(rng.uniform(-2.0, 2.0)),
            )
            visible_from = int(rng.integers(0, max(1, n // 2)))
            visible_to = int(rng.integers(visible_from + 5, n + 5))
            distractors.append((track, visible_from, visible_to))

    frames = []
    for f in range(n):
        phase = 2.0 * math.pi * f / 10.0
        label = ClassLabel.NORMAL
        if spec.kind in ("walk", "bystanders"):
            pts = _walk_pose(patient.step_x(), phase)
            depth = patient.base_depth + 0.3 * math.sin(2.0 * math.pi * f / n)
        elif spec.kind == "fall_during_walk":
            if f < onset:
                pts = _walk_pose(patient.step_x(), phase)
            else:
                upright = _pose_points(_STANDING, (patient.x, _STAND_ANCHOR_Y))
                # tipping starts with an impulse, so the angle grows like sqrt(t)
                progress = math.sqrt(min(1.0, (f - onset + 1) / transition))
                theta = sideways * progress * math.pi / 2.0
                pts = _rotate_about(upright, _ankle_pivot(upright), theta)
                label = ClassLabel.EMERGENCY
            depth = patient.base_depth - (0.2 if label is ClassLabel.EMERGENCY else 0.0)
        elif spec.kind == "sit_wheelchair":
            pts = _pose_points(_SEATED, (patient.x, _SEAT_ANCHOR_Y))
            depth = patient.base_depth + 0.2 * math.sin(2.0 * math.pi * f / n)
        elif spec.kind == "slump_unconscious":
            pts = dict(_SEATED)
            if f >= onset:
                progress = min(1.0, (f - onset + 1) / transition)
                drop = 13.0 * progress
                tilt = sideways * 8.0 * progress
                for joint in _HEAD_JOINTS:
                    dx, dy = pts[joint]
                    pts[joint] = (dx + tilt, dy - drop)
                nx, ny = pts[NECK]
                pts[NECK] = (nx + 0.4 * tilt, ny - 4.0 * progress)
                label = ClassLabel.EMERGENCY
            pts = _pose_points(pts, (patient.x, _SEAT_ANCHOR_Y))
            depth = patient.base_depth
        elif spec.kind == "stand_up_pause":
            if f < onset:
                pts = _pose_points(_SEATED, (patient.x, _SEAT_ANCHOR_Y))
            else:
                progress = min(1.0, (f - onset + 1) / transition)
                anchor_y = _SEAT_ANCHOR_Y + (_STAND_ANCHOR_Y - _SEAT_ANCHOR_Y) * progress
                blended = {
                    i: (
                        _SEATED[i][0] + (_STANDING[i][0] - _SEATED[i][0]) * progress,
                        _SEATED[i][1] + (_STANDING[i][1] - _SEATED[i][1]) * progress,
                    )
                    for i in _SEATED
                }
                pts = _pose_points(blended, (patient.x, anchor_y))
                label = ClassLabel.PAUSE
            depth = patient.base_depth
        else:  # pragma: no cover - validate() guards
            raise InvalidSpec(spec.kind)

        skeletons = [_finish_skeleton(pts, rng, spec, depth, person_index=0)]
        for idx, (track, lo, hi) in enumerate(distractors, start=1):
            if not lo <= f < hi:
                continue
            dp = _walk_pose(track.step_x(), phase + idx)
            skeletons.append(_finish_skeleton(dp, rng, spec, track.base_depth, person_index=idx))
        order = rng.permutation(len(skeletons))
        marker = None
        if f in marker_frames:
            neck = skeletons[0].keypoints[NECK]
            hip = skeletons[0].keypoints[MID_HIP]
            marker = ((neck.x_px + hip.x_px) / 2.0, (neck.y_px + hip.y_px) / 2.0)
        frames.append(
            PoseFrame(
                timestamp_ms=f * spec.frame_period_ms,
                skeletons=tuple(skeletons[i] for i in order),
                marker_px=marker,
                label=label,
            )
        )

    mode = Mode.WALKING if spec.kind in _WALKING_KINDS else Mode.WHEELCHAIR
    return VideoSequence(
        video_id=f"{spec.kind}-{spec.seed:05d}",
        frames=tuple(frames),
        mode=mode,
        frame_period_ms=spec.frame_period_ms,
        camera="synthetic",
        location="synthetic",
    )


def generate_dataset(specs: list[ScenarioSpec], mode: str | None = None) -> Dataset:
    sequences = tuple(generate_sequence(s) for s in specs)
    if mode is None:
        modes = {v.mode for v in sequences}
        mode = modes.pop() if len(modes) == 1 else Mode.COMBINED
    return Dataset(sequences=sequences, mode=mode)


def expand_scenarios(entries: list[dict], base_seed: int) -> list[ScenarioSpec]:
    """Expand [{kind, count, ...}] entries into per-video specs with distinct seeds."""
    specs = []
    offset = 0
    for entry in entries:
        count = int(entry.get("count", 1))
        if count < 1:
            raise InvalidSpec("scenario count must be >= 1")
        for _ in range(count):
            specs.append(
                ScenarioSpec(
                    kind=entry["kind"],
                    duration_frames=int(entry.get("duration_frames", 50)),
                    noise_px=float(entry.get("noise_px", 0.0)),
                    dropout_rate=float(entry.get("dropout_rate", 0.0)),
                    seed=base_seed + offset,
                    frame_period_ms=int(entry.get("frame_period_ms", 100)),
                )
            )
            offset += 1
    return specs

"""Domain types, JSONL dataset ingestion, class statistics, and video-level splits.

Canonical on-disk layout: one directory per dataset holding ``manifest.json``
plus one ``<video_id>.jsonl`` file per video (one frame record per line).
"""
from __future__ import annotations

import json
import random
from collections import Counter
from dataclasses import dataclass
from enum import IntEnum
from pathlib import Path
from typing import Optional, Sequence

from .errors import (
    InconsistentCount,
    InvalidMode,
    MalformedRecord,
    MissingManifest,
    TooFewVideos,
    UnknownLabel,
)

IMAGE_WIDTH = 480
IMAGE_HEIGHT = 360
NUM_KEYPOINTS = 25
DEFAULT_FRAME_PERIOD_MS = 100

# BODY_25 joint indices (pose-estimator default ordering).
NOSE = 0
NECK = 1
R_SHOULDER = 2
R_ELBOW = 3
R_WRIST = 4
L_SHOULDER = 5
L_ELBOW = 6
L_WRIST = 7
MID_HIP = 8
R_HIP = 9
R_KNEE = 10
R_ANKLE = 11
L_HIP = 12
L_KNEE = 13
L_ANKLE = 14
R_EYE = 15
L_EYE = 16
R_EAR = 17
L_EAR = 18
L_BIG_TOE = 19
L_SMALL_TOE = 20
L_HEEL = 21
R_BIG_TOE = 22
R_SMALL_TOE = 23
R_HEEL = 24

TORSO_JOINTS = (NECK, MID_HIP, R_SHOULDER, L_SHOULDER, R_HIP, L_HIP)


class ClassLabel(IntEnum):
    NORMAL = 0
    EMERGENCY = 1
    PAUSE = 2


class Mode:
    WALKING = "walking"
    WHEELCHAIR = "wheelchair"
    COMBINED = "combined"
    ALL = (WALKING, WHEELCHAIR, COMBINED)


def n_classes_for_mode(mode: str) -> int:
    """Walking streams are binary; wheelchair and combined carry the Pause class."""
    return 2 if mode == Mode.WALKING else 3


@dataclass(frozen=True)
class Keypoint:
    """One joint detection. ``confidence == 0`` means the joint is missing
    and its coordinates are pinned to (0, 0)."""
    x_px: float
    y_px: float
    confidence: float
    depth_m: Optional[float] = None

    @property
    def missing(self) -> bool:
        return self.confidence <= 0.0


MISSING_KEYPOINT = Keypoint(0.0, 0.0, 0.0, None)


@dataclass(frozen=True)
class Skeleton:
    keypoints: tuple  # exactly NUM_KEYPOINTS entries
    person_index: int = 0

    def visible(self) -> list[int]:
        """Indices of non-missing keypoints."""
        return [i for i, kp in enumerate(self.keypoints) if not kp.missing]


@dataclass(frozen=True)
class PoseFrame:
    timestamp_ms: int
    skeletons: tuple
    marker_px: Optional[tuple] = None
    label: Optional[ClassLabel] = None


@dataclass(frozen=True)
class VideoSequence:
    video_id: str
    frames: tuple
    mode: str = Mode.WALKING
    frame_period_ms: int = DEFAULT_FRAME_PERIOD_MS
    camera: str = ""
    location: str = ""

    @property
    def n_frames(self) -> int:
        return len(self.frames)


@dataclass(frozen=True)
class Dataset:
    sequences: tuple
    mode: str = Mode.WALKING

    @property
    def n_frames(self) -> int:
        return sum(v.n_frames for v in self.sequences)

    @property
    def video_ids(self) -> list[str]:
        return [v.video_id for v in self.sequences]


# --- frame record (de)serialization ------------------------------------------

def _parse_keypoint(entry) -> Keypoint:
    if not isinstance(entry, (list, tuple)) or len(entry) != 4:
        raise MalformedRecord(f"keypoint entry must be [x, y, conf, depth|null], got {entry!r}")
    x, y, conf, depth = entry
    for v in (x, y, conf):
        if not isinstance(v, (int, float)) or isinstance(v, bool):
            raise MalformedRecord(f"non-numeric keypoint field {v!r}")
    if depth is not None and (not isinstance(depth, (int, float)) or isinstance(depth, bool)):
        raise MalformedRecord(f"non-numeric depth {depth!r}")
    if not 0.0 <= conf <= 1.0:
        raise MalformedRecord(f"confidence {conf} outside [0, 1]")
    if conf == 0.0:
        return MISSING_KEYPOINT
    if depth is not None and depth <= 0:
        raise MalformedRecord(f"depth {depth} must be positive")
    return Keypoint(float(x), float(y), float(conf), None if depth is None else float(depth))


def frame_from_dict(rec: dict) -> PoseFrame:
    """Build a PoseFrame from one decoded JSONL record."""
    try:
        t = rec["t"]
        label = rec["label"]
        marker = rec.get("marker")
        skeletons = rec["skeletons"]
    except (KeyError, TypeError) as exc:
        raise MalformedRecord(f"missing field in frame record: {exc}") from exc
    if not isinstance(t, int) or isinstance(t, bool):
        raise MalformedRecord(f"timestamp must be an integer, got {t!r}")
    if label is not None:
        if not isinstance(label, int) or isinstance(label, bool) or label not in (0, 1, 2):
            raise UnknownLabel(f"label id {label!r} not in {{0, 1, 2}}")
        label = ClassLabel(label)
    if marker is not None:
        if not isinstance(marker, (list, tuple)) or len(marker) != 2:
            raise MalformedRecord(f"marker must be [x, y] or null, got {marker!r}")
        marker = (float(marker[0]), float(marker[1]))
    if not isinstance(skeletons, list):
        raise MalformedRecord("skeletons must be a list")
    parsed = []
    for sk in skeletons:
        try:
            kp_entries = sk["kp"]
            person = sk.get("id", 0)
        except (KeyError, TypeError) as exc:
            raise MalformedRecord(f"bad skeleton entry: {exc}") from exc
        if not isinstance(kp_entries, list) or len(kp_entries) != NUM_KEYPOINTS:
            raise MalformedRecord(
                f"skeleton must carry exactly {NUM_KEYPOINTS} keypoints, got {len(kp_entries) if isinstance(kp_entries, list) else kp_entries!r}"
            )
        keypoints = tuple(_parse_keypoint(e) for e in kp_entries)
        if all(kp.missing for kp in keypoints):
            continue  # fully undetected skeleton carries no information
        parsed.append(Skeleton(keypoints=keypoints, person_index=int(person)))
    return PoseFrame(timestamp_ms=t, skeletons=tuple(parsed), marker_px=marker, label=label)


def parse_frame_record(line: str) -> PoseFrame:
    """Parse one JSONL frame record."""
    try:
        rec = json.loads(line)
    except json.JSONDecodeError as exc:
        raise MalformedRecord(f"invalid JSON: {exc}") from exc
    if not isinstance(rec, dict):
        raise MalformedRecord("frame record must be a JSON object")
    return frame_from_dict(rec)


def frame_to_dict(frame: PoseFrame) -> dict:
    return {
        "t": frame.timestamp_ms,
        "label": None if frame.label is None else int(frame.label),
        "marker": None if frame.marker_px is None else [frame.marker_px[0], frame.marker_px[1]],
        "skeletons": [
            {
                "id": sk.person_index,
                "kp": [[kp.x_px, kp.y_px, kp.confidence, kp.depth_m] for kp in sk.keypoints],
            }
            for sk in frame.skeletons
        ],
    }


def serialize_frame_record(frame: PoseFrame) -> str:
    return json.dumps(frame_to_dict(frame), separators=(",", ":"))


# --- dataset loading ----------------------------------------------------------

def write_dataset(dataset: Dataset, path: str | Path, meta: Optional[dict] = None) -> Path:
    """Write a dataset directory in the canonical manifest + JSONL layout.
    ``meta`` (e.g. generator config + seed) is embedded in the manifest."""
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    manifest = {
        "mode": dataset.mode,
        "videos": [
            {
                "id": v.video_id,
                "frames": v.n_frames,
                "frame_period_ms": v.frame_period_ms,
                "mode": v.mode,
            }
            for v in dataset.sequences
        ],
    }
    if meta:
        manifest["meta"] = meta
    (root / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))
    for v in dataset.sequences:
        with open(root / f"{v.video_id}.jsonl", "w") as fh:
            for frame in v.frames:
                fh.write(serialize_frame_record(frame) + "\n")
    return root


def load_video(path: Path, video_id: str, mode: str, frame_period_ms: int) -> VideoSequence:
    frames = []
    last_t = None
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                frame = parse_frame_record(line)
            except (MalformedRecord, UnknownLabel) as exc:
                raise type(exc)(f"{path.name}:{lineno}: {exc}") from exc
            if last_t is not None and frame.timestamp_ms <= last_t:
                raise MalformedRecord(
                    f"{path.name}:{lineno}: timestamps must be strictly increasing"
                )
            last_t = frame.timestamp_ms
            frames.append(frame)
    return VideoSequence(
        video_id=video_id, frames=tuple(frames), mode=mode, frame_period_ms=frame_period_ms
    )


def load_dataset(path: str | Path, mode: Optional[str] = None) -> Dataset:
    """Load every video listed in the manifest, restricted to ``mode`` when given.

    Raises MissingManifest when the directory has no manifest and
    InconsistentCount when a video's parsed frame count disagrees with it.
    """
    root = Path(path)
    manifest_path = root / "manifest.json"
    if not manifest_path.is_file():
        raise MissingManifest(f"no manifest.json under {root}")
    manifest = json.loads(manifest_path.read_text())
    dataset_mode = manifest.get("mode", Mode.COMBINED)
    if dataset_mode not in Mode.ALL:
        raise InvalidMode(f"manifest mode {dataset_mode!r} not one of {Mode.ALL}")
    if mode is not None and mode not in Mode.ALL:
        raise InvalidMode(f"requested mode {mode!r} not one of {Mode.ALL}")
    sequences = []
    for entry in manifest.get("videos", []):
        video_mode = entry.get("mode", dataset_mode)
        if mode is not None and mode != Mode.COMBINED and video_mode != mode:
            continue
        video_path = root / f"{entry['id']}.jsonl"
        if not video_path.is_file():
            raise InconsistentCount(f"manifest lists {entry['id']} but {video_path.name} is absent")
        frame_period_ms = int(entry.get("frame_period_ms", DEFAULT_FRAME_PERIOD_MS))
        if frame_period_ms <= 0:
            raise MalformedRecord(f"{entry['id']}: frame_period_ms must be positive")
        video = load_video(
            video_path,
            video_id=entry["id"],
            mode=video_mode,
            frame_period_ms=frame_period_ms,
        )
        if video.n_frames != entry["frames"]:
            raise InconsistentCount(
                f"{entry['id']}: manifest says {entry['frames']} frames, file holds {video.n_frames}"
            )
        sequences.append(video)
    ids = [v.video_id for v in sequences]
    if len(set(ids)) != len(ids):
        raise MalformedRecord("duplicate video_id in manifest")
    return Dataset(sequences=tuple(sequences), mode=mode or dataset_mode)


# --- statistics and splits ----------------------------------------------------

def class_distribution(dataset: Dataset) -> dict:
    """Frame counts per class label; labels absent from the data count zero."""
    counts = Counter()
    for video in dataset.sequences:
        for frame in video.frames:
            if frame.label is not None:
                counts[ClassLabel(frame.label)] += 1
    return {label: counts.get(label, 0) for label in ClassLabel}


def split_videos(dataset: Dataset, test_fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Whole-video train/test split: seeded shuffle, then greedy accumulation of
    test videos while that moves the achieved frame fraction closer to target."""
    if not 0.0 < test_fraction < 1.0:
        raise ValueError(f"test_fraction must be in (0, 1), got {test_fraction}")
    if len(dataset.sequences) < 2:
        raise TooFewVideos("need at least 2 videos to split")
    order = list(dataset.sequences)
    random.Random(seed).shuffle(order)
    target = test_fraction * dataset.n_frames
    test_ids = set()
    acc = 0
    for video in order:
        if abs(acc + video.n_frames - target) <= abs(acc - target):
            test_ids.add(video.video_id)
            acc += video.n_frames
        else:
            break
    if not test_ids:
        test_ids.add(order[0].video_id)
    if len(test_ids) == len(order):
        test_ids.discard(order[-1].video_id)
    train = tuple(v for v in dataset.sequences if v.video_id not in test_ids)
    test = tuple(v for v in dataset.sequences if v.video_id in test_ids)
    return (
        Dataset(sequences=train, mode=dataset.mode),
        Dataset(sequences=test, mode=dataset.mode),
    )


def kfold_videos(dataset: Dataset, k: int, seed: int) -> list[tuple[Dataset, Dataset]]:
    """k (train, validation) pairs whose validation parts partition the video set."""
    if k < 2:
        raise ValueError(f"k must be >= 2, got {k}")
    if len(dataset.sequences) < k:
        raise TooFewVideos(f"need at least {k} videos for {k}-fold CV")
    order = list(dataset.sequences)
    random.Random(seed).shuffle(order)
    n = len(order)
    folds = []
    # contiguous chunks of the shuffled list, sizes differing by at most one
    base, extra = divmod(n, k)
    start = 0
    for i in range(k):
        size = base + (1 if i < extra else 0)
        val_ids = {v.video_id for v in order[start:start + size]}
        start += size
        train = tuple(v for v in dataset.sequences if v.video_id not in val_ids)
        val = tuple(v for v in dataset.sequences if v.video_id in val_ids)
        folds.append(
            (Dataset(sequences=train, mode=dataset.mode), Dataset(sequences=val, mode=dataset.mode))
        )
    return folds


def subset(dataset: Dataset, video_ids: Sequence[str]) -> Dataset:
    wanted = set(video_ids)
    return Dataset(
        sequences=tuple(v for v in dataset.sequences if v.video_id in wanted),
        mode=dataset.mode,
    )

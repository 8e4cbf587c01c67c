"""Turn labeled videos into classifier samples: track the patient through each
sequence, featurize the selected skeleton, and keep frame-to-sample alignment."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset, VideoSequence
from .errors import NotEnoughKeypoints
from .features import N_FEATURES, extract_features
from .tracking import TrackState, select_patient

NO_LABEL = -1  # sentinel for unlabeled frames / frames without a usable patient


@dataclass(frozen=True)
class VideoSamples:
    video_id: str
    timestamps: np.ndarray     # (T,) all frames of the video
    truth: np.ndarray          # (T,) class ids, NO_LABEL where unlabeled
    features: np.ndarray       # (m, N_FEATURES) for usable frames only
    frame_index: np.ndarray    # (m,) row -> frame position


def video_samples(video: VideoSequence) -> VideoSamples:
    state = TrackState()
    timestamps = np.array([f.timestamp_ms for f in video.frames], dtype=np.int64)
    truth = np.array(
        [NO_LABEL if f.label is None else int(f.label) for f in video.frames], dtype=np.int64
    )
    rows = []
    index = []
    for pos, frame in enumerate(video.frames):
        patient, state = select_patient(frame, state)
        if patient is None:
            continue
        try:
            vec = extract_features(patient)
        except NotEnoughKeypoints:
            continue
        rows.append(vec)
        index.append(pos)
    features = np.array(rows, dtype=np.float64) if rows else np.empty((0, N_FEATURES))
    return VideoSamples(
        video_id=video.video_id,
        timestamps=timestamps,
        truth=truth,
        features=features,
        frame_index=np.array(index, dtype=np.int64),
    )


def dataset_samples(dataset: Dataset) -> dict:
    return {video.video_id: video_samples(video) for video in dataset.sequences}


def training_matrix(cache: dict, video_ids) -> tuple[np.ndarray, np.ndarray]:
    """Stack labeled, featurizable frames of the given videos into (X, y)."""
    xs, ys = [], []
    for vid in video_ids:
        vs = cache[vid]
        labels = vs.truth[vs.frame_index]
        keep = labels != NO_LABEL
        xs.append(vs.features[keep])
        ys.append(labels[keep])
    if not xs:
        return np.empty((0, N_FEATURES)), np.empty(0, dtype=np.int64)
    return np.concatenate(xs, axis=0), np.concatenate(ys, axis=0)

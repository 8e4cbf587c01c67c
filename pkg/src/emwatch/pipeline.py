"""Per-video prediction traces: tracking -> features -> scores -> softmax ->
threshold rule, aligned frame by frame with the ground truth."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .calibration import Calibration, classify_rows, softmax_rows
from .classifiers import TrainedModel, predict_scores
from .data import VideoSequence
from .sampling import NO_LABEL, VideoSamples, video_samples


@dataclass(frozen=True)
class VideoTrace:
    video_id: str
    frame_period_ms: int
    timestamps: np.ndarray  # (T,)
    truth: np.ndarray       # (T,), NO_LABEL where unlabeled
    raw: np.ndarray         # (T,), NO_LABEL where no usable prediction
    argmax: np.ndarray      # (T,), prediction without the threshold rule


def trace_samples(
    model: TrainedModel,
    calibration: Optional[Calibration],
    samples: VideoSamples,
    frame_period_ms: int,
) -> VideoTrace:
    raw = np.full(samples.timestamps.size, NO_LABEL, dtype=np.int64)
    argmax = raw.copy()
    if samples.features.shape[0]:
        scores = predict_scores(model, samples.features)
        probs = softmax_rows(scores)
        raw[samples.frame_index] = classify_rows(probs, calibration)
        argmax[samples.frame_index] = np.argmax(probs, axis=1)
    return VideoTrace(
        video_id=samples.video_id,
        frame_period_ms=frame_period_ms,
        timestamps=samples.timestamps,
        truth=samples.truth,
        raw=raw,
        argmax=argmax,
    )


def trace_video(
    model: TrainedModel,
    calibration: Optional[Calibration],
    video: VideoSequence,
) -> VideoTrace:
    return trace_samples(model, calibration, video_samples(video), video.frame_period_ms)

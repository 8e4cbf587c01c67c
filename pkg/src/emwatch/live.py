"""Sequential frame-by-frame driver: tracking, features, scoring, threshold
rule and delay filter in one stateful object, with per-frame wall-clock cost."""
from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Optional

from .calibration import Calibration, classify_with_threshold, softmax
from .classifiers import TrainedModel, decision_scores
from .data import ClassLabel, PoseFrame
from .errors import NotEnoughKeypoints
from .features import extract_features
from .sampling import NO_LABEL
from .stream import DelayFilter, EmergencyEvent, delay_filter_step
from .tracking import TrackState, select_patient

EMERGENCY = int(ClassLabel.EMERGENCY)


@dataclass(frozen=True)
class StepResult:
    timestamp_ms: int
    raw: int                      # NO_LABEL when no usable patient this frame
    committed: int
    event: Optional[EmergencyEvent]
    elapsed_ms: float


class StreamProcessor:
    """One per stream; step() must be called in frame order."""

    def __init__(
        self,
        model: TrainedModel,
        calibration: Optional[Calibration],
        delay_ms: int,
        frame_period_ms: int,
        video_id: str = "live",
    ):
        self.model = model
        self.calibration = calibration
        self.video_id = video_id
        self.track = TrackState()
        self.filter = DelayFilter(delay_ms=delay_ms, frame_period_ms=frame_period_ms)
        self.history: list[tuple[int, int]] = []  # (timestamp_ms, raw)

    def step(self, frame: PoseFrame) -> StepResult:
        start = time.perf_counter()
        patient, self.track = select_patient(frame, self.track)
        raw = NO_LABEL
        if patient is not None:
            try:
                vec = extract_features(patient)
            except NotEnoughKeypoints:
                vec = None
            if vec is not None:
                probs = softmax(decision_scores(self.model, vec))
                raw = classify_with_threshold(probs, self.calibration)
        previous = self.filter.committed
        if raw == NO_LABEL:
            committed = previous
        else:
            self.filter, committed = delay_filter_step(self.filter, raw)
        self.history.append((frame.timestamp_ms, raw))
        event = None
        if committed == EMERGENCY and previous != EMERGENCY:
            first_raw_ms = frame.timestamp_ms
            for t, r in reversed(self.history):
                if r != EMERGENCY:
                    break
                first_raw_ms = t
            event = EmergencyEvent(
                video_id=self.video_id,
                trigger_timestamp_ms=frame.timestamp_ms,
                first_raw_timestamp_ms=first_raw_ms,
            )
        elapsed_ms = (time.perf_counter() - start) * 1000.0
        return StepResult(
            timestamp_ms=frame.timestamp_ms,
            raw=raw,
            committed=committed,
            event=event,
            elapsed_ms=elapsed_ms,
        )

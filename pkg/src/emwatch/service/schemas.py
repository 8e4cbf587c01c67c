"""Request/response models for the HTTP service; the CLI speaks the same types."""
from __future__ import annotations

from typing import Optional

from pydantic import BaseModel, Field


class ScenarioEntry(BaseModel):
    kind: str
    count: int = 1
    duration_frames: int = 50
    noise_px: float = 0.0
    dropout_rate: float = 0.0
    frame_period_ms: int = 100


class SynthRequest(BaseModel):
    out_dir: str
    scenarios: list[ScenarioEntry]
    seed: int = 0
    mode: Optional[str] = None  # inferred from scenario kinds when omitted


class SynthResponse(BaseModel):
    dataset_dir: str
    mode: str
    n_videos: int
    n_frames: int
    class_counts: dict[str, int]


class TrainRequest(BaseModel):
    dataset_dir: str
    out_dir: str
    family: str = "svm"
    mode: Optional[str] = None
    grid: Optional[list[dict]] = None      # inline spec payloads
    grid_file: Optional[str] = None        # or a JSON file of spec payloads
    test_fraction: float = Field(default=0.31, gt=0.0, lt=1.0)
    k: int = Field(default=5, ge=2)
    seed: int = 0


class TrainResponse(BaseModel):
    model_path: str
    cv_path: str
    family: str
    best_spec: dict
    mean_cv_recalls: list[float]
    train_videos: int
    test_videos: int
    train_frames: int
    test_frames: int


class CalibrateRequest(BaseModel):
    dataset_dir: str
    model_path: str
    out_dir: str


class CalibrateResponse(BaseModel):
    calibration_path: str
    curve_csv: str
    roc_csv: Optional[str]
    mode: str
    threshold: float


class TuneDelayRequest(BaseModel):
    dataset_dir: str
    model_path: str
    calibration_path: Optional[str] = None
    out_dir: str


class TuneDelayResponse(BaseModel):
    delay_path: str
    curve_csv: str
    delay_ms: int
    best_f1: float


class EvaluateRequest(BaseModel):
    dataset_dir: str
    model_path: str
    calibration_path: Optional[str] = None
    delay_path: Optional[str] = None
    out_dir: str
    model_name: Optional[str] = None


class EvaluateResponse(BaseModel):
    report_path: str
    table_path: str
    predictions_path: str
    events_path: str
    table: str
    report: dict


class ReplayRequest(BaseModel):
    stream_path: str
    model_path: str
    calibration_path: Optional[str] = None
    delay_path: Optional[str] = None
    delay_ms: Optional[int] = None         # wins over delay_path when set
    out_dir: str
    paced: bool = False                    # sleep to the stream's frame period


class ReplayResponse(BaseModel):
    event_log_path: str
    events: list[dict]
    frames: int
    throughput_fps: float
    mean_frame_ms: float
    max_frame_ms: float


class SessionCreateRequest(BaseModel):
    model_path: str
    calibration_path: Optional[str] = None
    delay_ms: int = 0
    frame_period_ms: int = 100
    video_id: str = "live"


class SessionCreateResponse(BaseModel):
    session_id: str


class SessionFrameRequest(BaseModel):
    record: dict  # one canonical frame record


class SessionFrameResponse(BaseModel):
    timestamp_ms: int
    raw: int
    committed: int
    event: Optional[dict]
    elapsed_ms: float


class SessionCloseResponse(BaseModel):
    frames_seen: int


class ErrorResponse(BaseModel):
    error: str
    detail: str

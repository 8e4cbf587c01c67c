"""HTTP service: one endpoint per workflow plus stateful live-stream sessions."""
from __future__ import annotations

import threading
import uuid
from typing import Optional

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from ..calibration import Calibration, load_calibration
from ..classifiers import TrainedModel, load_model
from ..data import frame_from_dict
from ..errors import EmwatchError, InconsistentCount, MissingManifest, SplitLeakage
from ..features import N_FEATURES
from ..live import StreamProcessor
from . import schemas, workflows

_STATUS = {
    MissingManifest: 404,
    InconsistentCount: 404,
    SplitLeakage: 409,
}


def _session_model(model_path: str) -> TrainedModel:
    """Accept either a train-command artifact or a bare serialized model."""
    try:
        _, model = workflows._load_model_artifact(model_path)
        return model
    except EmwatchError:
        return load_model(model_path, expected_n_features=N_FEATURES)


def _session_calibration(path: Optional[str]) -> Optional[Calibration]:
    if path is None:
        return None
    try:
        payload = workflows._read_artifact(path, "calibration")
        return Calibration.from_dict(payload["calibration"])
    except EmwatchError:
        return load_calibration(path)


def _not_found(detail: str) -> JSONResponse:
    return JSONResponse(
        status_code=404,
        content=schemas.ErrorResponse(error="UnknownSession", detail=detail).model_dump(),
    )


def create_app() -> FastAPI:
    app = FastAPI(title="emwatch", version="0.1.0")
    app.state.sessions = {}
    app.state.lock = threading.Lock()

    @app.exception_handler(EmwatchError)
    async def _emwatch_error(_: Request, exc: EmwatchError) -> JSONResponse:
        status = next((s for t, s in _STATUS.items() if isinstance(exc, t)), 400)
        return JSONResponse(
            status_code=status,
            content=schemas.ErrorResponse(error=type(exc).__name__, detail=str(exc)).model_dump(),
        )

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok"}

    @app.post("/synth", response_model=schemas.SynthResponse)
    def synth(req: schemas.SynthRequest) -> schemas.SynthResponse:
        return workflows.run_synth(req)

    @app.post("/train", response_model=schemas.TrainResponse)
    def train(req: schemas.TrainRequest) -> schemas.TrainResponse:
        return workflows.run_train(req)

    @app.post("/calibrate", response_model=schemas.CalibrateResponse)
    def calibrate(req: schemas.CalibrateRequest) -> schemas.CalibrateResponse:
        return workflows.run_calibrate(req)

    @app.post("/tune-delay", response_model=schemas.TuneDelayResponse)
    def tune_delay(req: schemas.TuneDelayRequest) -> schemas.TuneDelayResponse:
        return workflows.run_tune_delay(req)

    @app.post("/evaluate", response_model=schemas.EvaluateResponse)
    def evaluate(req: schemas.EvaluateRequest) -> schemas.EvaluateResponse:
        return workflows.run_evaluate(req)

    @app.post("/replay", response_model=schemas.ReplayResponse)
    def replay(req: schemas.ReplayRequest) -> schemas.ReplayResponse:
        return workflows.run_replay(req)

    # --- live sessions: one stateful processor per connected stream ---

    @app.post("/sessions", response_model=schemas.SessionCreateResponse)
    def create_session(req: schemas.SessionCreateRequest) -> schemas.SessionCreateResponse:
        processor = StreamProcessor(
            _session_model(req.model_path),
            _session_calibration(req.calibration_path),
            req.delay_ms,
            req.frame_period_ms,
            video_id=req.video_id,
        )
        session_id = uuid.uuid4().hex
        with app.state.lock:
            app.state.sessions[session_id] = processor
        return schemas.SessionCreateResponse(session_id=session_id)

    @app.post("/sessions/{session_id}/frames", response_model=schemas.SessionFrameResponse)
    def push_frame(session_id: str, req: schemas.SessionFrameRequest):
        with app.state.lock:
            processor = app.state.sessions.get(session_id)
        if processor is None:
            return _not_found(session_id)
        result = processor.step(frame_from_dict(req.record))
        return schemas.SessionFrameResponse(
            timestamp_ms=result.timestamp_ms,
            raw=result.raw,
            committed=result.committed,
            event=None if result.event is None else result.event.to_dict(),
            elapsed_ms=result.elapsed_ms,
        )

    @app.delete("/sessions/{session_id}", response_model=schemas.SessionCloseResponse)
    def close_session(session_id: str):
        with app.state.lock:
            processor = app.state.sessions.pop(session_id, None)
        if processor is None:
            return _not_found(session_id)
        return schemas.SessionCloseResponse(frames_seen=len(processor.history))

    return app


app = create_app()

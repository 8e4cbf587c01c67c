"""Command workflows: each takes a request model, reads/writes artifact files,
and returns a response model. Every artifact embeds the semantic config, the
seed, and content hashes of the splits it was computed on, so reruns with the
same inputs are byte-identical and train/test leakage is detectable.
"""
from __future__ import annotations

import hashlib
import json
import time
from pathlib import Path
from typing import Optional

import numpy as np

from .. import classifiers
from ..calibration import (
    Calibration,
    emergency_threshold,
    export_curve_csv,
    export_roc_csv,
    softmax_rows,
    youden_threshold,
)
from ..classifiers import grids
from ..data import (
    Dataset,
    Mode,
    class_distribution,
    load_dataset,
    load_video,
    n_classes_for_mode,
    split_videos,
    subset,
    write_dataset,
)
from ..errors import InconsistentCount, InvalidSpec, SplitLeakage
from ..live import StreamProcessor
from ..pipeline import trace_video
from ..report import evaluate_traces, render_table
from ..sampling import dataset_samples, training_matrix
from ..stream import export_delay_curve_csv, optimize_delay, write_event_log
from ..synth import expand_scenarios, generate_dataset
from . import schemas

ARTIFACT_VERSION = 1


# --- artifact plumbing -----------------------------------------------------------

def split_hash(dataset: Dataset) -> str:
    payload = json.dumps(sorted((v.video_id, v.n_frames) for v in dataset.sequences))
    return hashlib.sha256(payload.encode()).hexdigest()


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")


def _read_artifact(path: str | Path, kind: str) -> dict:
    p = Path(path)
    if not p.is_file():
        raise InconsistentCount(f"no {kind} artifact at {p}")
    payload = json.loads(p.read_text())
    if payload.get("artifact") != kind or payload.get("format_version") != ARTIFACT_VERSION:
        raise InvalidSpec(f"{p} is not a version-{ARTIFACT_VERSION} {kind} artifact")
    return payload


def _out_dir(path: str) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_grid(req: schemas.TrainRequest) -> list:
    if req.grid is not None:
        entries = req.grid
    elif req.grid_file is not None:
        grid_path = Path(req.grid_file)
        if not grid_path.is_file():
            raise InvalidSpec(f"grid file {grid_path} does not exist")
        entries = json.loads(grid_path.read_text())
    else:
        return grids.default_grid(req.family)
    if not isinstance(entries, list) or not entries:
        raise InvalidSpec("grid must be a non-empty list of spec payloads")
    return [classifiers.spec_from_dict(e) for e in entries]


# --- commands --------------------------------------------------------------------

def run_synth(req: schemas.SynthRequest) -> schemas.SynthResponse:
    specs = expand_scenarios([e.model_dump() for e in req.scenarios], base_seed=req.seed)
    dataset = generate_dataset(specs, mode=req.mode)
    meta = {"seed": req.seed, "scenarios": [e.model_dump() for e in req.scenarios]}
    out = write_dataset(dataset, req.out_dir, meta=meta)
    counts = class_distribution(dataset)
    return schemas.SynthResponse(
        dataset_dir=str(out),
        mode=dataset.mode,
        n_videos=len(dataset.sequences),
        n_frames=dataset.n_frames,
        class_counts={label.name.lower(): n for label, n in counts.items()},
    )


def run_train(req: schemas.TrainRequest) -> schemas.TrainResponse:
    dataset = load_dataset(req.dataset_dir, mode=req.mode)
    grid = _load_grid(req)
    train_ds, test_ds = split_videos(dataset, req.test_fraction, req.seed)
    best_spec, mean_recalls = classifiers.grid_search_cv(grid, train_ds, k=req.k, seed=req.seed)
    cache = dataset_samples(train_ds)
    X, y = training_matrix(cache, train_ds.video_ids)
    model = classifiers.train(
        best_spec, X, y, seed=req.seed, n_classes=n_classes_for_mode(dataset.mode)
    )

    out = _out_dir(req.out_dir)
    config = {
        "family": req.family,
        "mode": dataset.mode,
        "k": req.k,
        "seed": req.seed,
        "test_fraction": req.test_fraction,
    }
    model_path = out / "model.json"
    _write_json(
        model_path,
        {
            "artifact": "model",
            "format_version": ARTIFACT_VERSION,
            "config": config,
            "dataset_hash": split_hash(dataset),
            "train_video_ids": train_ds.video_ids,
            "test_video_ids": test_ds.video_ids,
            "train_split_hash": split_hash(train_ds),
            "test_split_hash": split_hash(test_ds),
            "model": classifiers.model_to_dict(model),
        },
    )
    cv_path = out / "cv_summary.json"
    best_index = int(np.argmax(mean_recalls))
    _write_json(
        cv_path,
        {
            "artifact": "cv_summary",
            "format_version": ARTIFACT_VERSION,
            "config": config,
            "grid": [classifiers.spec_to_dict(s) for s in grid],
            "mean_recalls": mean_recalls,
            "best_index": best_index,
        },
    )
    return schemas.TrainResponse(
        model_path=str(model_path),
        cv_path=str(cv_path),
        family=best_spec.family,
        best_spec=classifiers.spec_to_dict(best_spec),
        mean_cv_recalls=mean_recalls,
        train_videos=len(train_ds.sequences),
        test_videos=len(test_ds.sequences),
        train_frames=train_ds.n_frames,
        test_frames=test_ds.n_frames,
    )


def _load_model_artifact(model_path: str) -> tuple[dict, classifiers.TrainedModel]:
    payload = _read_artifact(model_path, "model")
    model = classifiers.model_from_dict(payload["model"])
    return payload, model


def _train_subset(payload: dict, dataset_dir: str) -> Dataset:
    dataset = load_dataset(dataset_dir, mode=payload["config"]["mode"])
    train_ds = subset(dataset, payload["train_video_ids"])
    if split_hash(train_ds) != payload["train_split_hash"]:
        raise InconsistentCount(
            "dataset does not match the training split recorded in the model artifact"
        )
    return train_ds


def run_calibrate(req: schemas.CalibrateRequest) -> schemas.CalibrateResponse:
    payload, model = _load_model_artifact(req.model_path)
    train_ds = _train_subset(payload, req.dataset_dir)
    cache = dataset_samples(train_ds)
    X, y = training_matrix(cache, train_ds.video_ids)
    scores = classifiers.predict_scores(model, X)
    if model.n_classes == 2:
        probs = softmax_rows(scores)[:, 1]
        calibration = youden_threshold(probs, y)
    else:
        calibration = emergency_threshold(scores, y)

    out = _out_dir(req.out_dir)
    calibration_path = out / "calibration.json"
    _write_json(
        calibration_path,
        {
            "artifact": "calibration",
            "format_version": ARTIFACT_VERSION,
            "split_hash": payload["train_split_hash"],
            "seed": payload["config"]["seed"],
            "calibration": calibration.to_dict(),
        },
    )
    curve_csv = out / "threshold_curve.csv"
    export_curve_csv(calibration, curve_csv)
    roc_csv = None
    if calibration.roc:
        roc_csv = out / "roc_curve.csv"
        export_roc_csv(calibration, roc_csv)
    return schemas.CalibrateResponse(
        calibration_path=str(calibration_path),
        curve_csv=str(curve_csv),
        roc_csv=None if roc_csv is None else str(roc_csv),
        mode=calibration.mode,
        threshold=calibration.threshold,
    )


def _load_calibration_artifact(path: Optional[str]) -> tuple[Optional[dict], Optional[Calibration]]:
    if path is None:
        return None, None
    payload = _read_artifact(path, "calibration")
    return payload, Calibration.from_dict(payload["calibration"])


def run_tune_delay(req: schemas.TuneDelayRequest) -> schemas.TuneDelayResponse:
    payload, model = _load_model_artifact(req.model_path)
    cal_payload, calibration = _load_calibration_artifact(req.calibration_path)
    if cal_payload is not None and cal_payload["split_hash"] != payload["train_split_hash"]:
        raise SplitLeakage("calibration was not computed on this model's training split")
    train_ds = _train_subset(payload, req.dataset_dir)
    periods = {v.frame_period_ms for v in train_ds.sequences}
    if len(periods) != 1:
        raise InvalidSpec(f"mixed frame periods in training videos: {sorted(periods)}")
    frame_period_ms = periods.pop()
    traces = [trace_video(model, calibration, v) for v in train_ds.sequences]
    delay_ms, curve = optimize_delay(
        [(t.raw, t.truth) for t in traces], frame_period_ms=frame_period_ms
    )
    best_f1 = max(point[1] for point in curve)

    out = _out_dir(req.out_dir)
    delay_path = out / "delay.json"
    _write_json(
        delay_path,
        {
            "artifact": "delay",
            "format_version": ARTIFACT_VERSION,
            "split_hash": payload["train_split_hash"],
            "seed": payload["config"]["seed"],
            "delay_ms": delay_ms,
            "best_f1": best_f1,
            "curve": [[d, f1, fp, fn] for d, f1, fp, fn in curve],
        },
    )
    curve_csv = out / "delay_curve.csv"
    export_delay_curve_csv(curve, curve_csv)
    return schemas.TuneDelayResponse(
        delay_path=str(delay_path),
        curve_csv=str(curve_csv),
        delay_ms=delay_ms,
        best_f1=best_f1,
    )


def run_evaluate(req: schemas.EvaluateRequest) -> schemas.EvaluateResponse:
    payload, model = _load_model_artifact(req.model_path)
    cal_payload, calibration = _load_calibration_artifact(req.calibration_path)
    delay_ms = 0
    delay_payload = None
    if req.delay_path is not None:
        delay_payload = _read_artifact(req.delay_path, "delay")
        delay_ms = int(delay_payload["delay_ms"])

    dataset = load_dataset(req.dataset_dir, mode=payload["config"]["mode"])
    test_ds = subset(dataset, payload["test_video_ids"])
    test_hash = split_hash(test_ds)
    if test_hash != payload["test_split_hash"]:
        raise InconsistentCount(
            "dataset does not match the test split recorded in the model artifact"
        )
    # train-only discipline: refuse fit artifacts whose split is the test split
    if cal_payload is not None and cal_payload["split_hash"] == test_hash:
        raise SplitLeakage("calibration was computed on the test split")
    if delay_payload is not None and delay_payload["split_hash"] == test_hash:
        raise SplitLeakage("delay was tuned on the test split")
    if payload["train_split_hash"] == test_hash:
        raise SplitLeakage("model was trained on the test split")

    model_name = req.model_name
    if model_name is None:
        model_name = model.family
        if calibration is not None and calibration.threshold is not None:
            model_name += "_thresh"
    traces = [trace_video(model, calibration, v) for v in test_ds.sequences]
    report, events, frame_records = evaluate_traces(
        traces,
        n_classes=model.n_classes,
        delay_ms=delay_ms,
        model_name=model_name,
        mode=test_ds.mode,
        threshold=None if calibration is None else calibration.threshold,
    )

    out = _out_dir(req.out_dir)
    report_path = out / "report.json"
    _write_json(
        report_path,
        {
            "artifact": "report",
            "format_version": ARTIFACT_VERSION,
            "seed": payload["config"]["seed"],
            "train_split_hash": payload["train_split_hash"],
            "test_split_hash": test_hash,
            "report": report.to_dict(),
        },
    )
    table = render_table([report])
    table_path = out / "report.txt"
    table_path.write_text(table)
    predictions_path = out / "predictions.jsonl"
    with open(predictions_path, "w") as fh:
        for record in frame_records:
            fh.write(json.dumps(record, sort_keys=True) + "\n")
    events_path = out / "events.jsonl"
    write_event_log(events, events_path)
    return schemas.EvaluateResponse(
        report_path=str(report_path),
        table_path=str(table_path),
        predictions_path=str(predictions_path),
        events_path=str(events_path),
        table=table,
        report=report.to_dict(),
    )


def run_replay(req: schemas.ReplayRequest) -> schemas.ReplayResponse:
    stream_path = Path(req.stream_path)
    if not stream_path.is_file():
        raise InconsistentCount(f"no stream file at {stream_path}")
    payload, model = _load_model_artifact(req.model_path)
    _, calibration = _load_calibration_artifact(req.calibration_path)
    if req.delay_ms is not None:
        delay_ms = req.delay_ms
    elif req.delay_path is not None:
        delay_ms = int(_read_artifact(req.delay_path, "delay")["delay_ms"])
    else:
        delay_ms = 0

    video = load_video(stream_path, video_id=stream_path.stem, mode=Mode.COMBINED,
                       frame_period_ms=100)
    diffs = np.diff([f.timestamp_ms for f in video.frames])
    frame_period_ms = int(np.median(diffs)) if diffs.size else 100

    processor = StreamProcessor(
        model, calibration, delay_ms, frame_period_ms, video_id=video.video_id
    )
    events = []
    elapsed = []
    wall_start = time.perf_counter()
    for frame in video.frames:
        result = processor.step(frame)
        elapsed.append(result.elapsed_ms)
        if result.event is not None:
            events.append(result.event)
        if req.paced:
            budget = frame_period_ms / 1000.0 - result.elapsed_ms / 1000.0
            if budget > 0:
                time.sleep(budget)
    wall_seconds = time.perf_counter() - wall_start

    out = _out_dir(req.out_dir)
    events_path = out / "events.jsonl"
    write_event_log(events, events_path)
    n = len(video.frames)
    return schemas.ReplayResponse(
        event_log_path=str(events_path),
        events=[e.to_dict() for e in events],
        frames=n,
        throughput_fps=n / wall_seconds if wall_seconds > 0 else 0.0,
        mean_frame_ms=float(np.mean(elapsed)) if elapsed else 0.0,
        max_frame_ms=float(np.max(elapsed)) if elapsed else 0.0,
    )

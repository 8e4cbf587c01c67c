"""Thin command-line client. Every verb builds the service request model and
either calls the workflow in process (default) or POSTs it to a running
service (--url). No pipeline logic lives here."""
from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import httpx

from .errors import EmwatchError
from .service import schemas, workflows

_ENDPOINTS = {
    "synth": ("/synth", schemas.SynthRequest, workflows.run_synth),
    "train": ("/train", schemas.TrainRequest, workflows.run_train),
    "calibrate": ("/calibrate", schemas.CalibrateRequest, workflows.run_calibrate),
    "tune-delay": ("/tune-delay", schemas.TuneDelayRequest, workflows.run_tune_delay),
    "evaluate": ("/evaluate", schemas.EvaluateRequest, workflows.run_evaluate),
    "replay": ("/replay", schemas.ReplayRequest, workflows.run_replay),
}


def _dispatch(ctx: click.Context, verb: str, payload: dict) -> None:
    path, request_model, run = _ENDPOINTS[verb]
    options = ctx.obj or {}
    config = options.get("config") or {}
    merged = {**config.get(verb, {}), **{k: v for k, v in payload.items() if v is not None}}
    if options.get("seed") is not None and "seed" in request_model.model_fields:
        merged.setdefault("seed", options["seed"])
    if options.get("out") is not None:
        merged.setdefault("out_dir", options["out"])
    try:
        request = request_model(**merged)
    except ValueError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    url = options.get("url")
    if url:
        response = httpx.post(url.rstrip("/") + path, json=request.model_dump(), timeout=None)
        if response.status_code != 200:
            click.echo(f"error: {response.status_code} {response.text}", err=True)
            sys.exit(2)
        click.echo(json.dumps(response.json(), indent=2, sort_keys=True))
        return
    try:
        result = run(request)
    except EmwatchError as exc:
        click.echo(f"error: {type(exc).__name__}: {exc}", err=True)
        sys.exit(2)
    click.echo(json.dumps(result.model_dump(), indent=2, sort_keys=True))


@click.group()
@click.option("--url", default=None, help="base URL of a running emwatch service")
@click.option("--seed", type=int, default=None, help="default seed for commands that take one")
@click.option("--out", default=None, help="default output directory")
@click.option("--config", "config_path", default=None, type=click.Path(),
              help="JSON file of per-command defaults, e.g. {\"train\": {\"k\": 5}}")
@click.pass_context
def main(ctx: click.Context, url, seed, out, config_path) -> None:
    """Recall-first human emergency detection over keypoint + depth streams."""
    config = {}
    if config_path is not None:
        path = Path(config_path)
        if not path.is_file():
            click.echo(f"error: config file {path} does not exist", err=True)
            sys.exit(2)
        config = json.loads(path.read_text())
    ctx.obj = {"url": url, "seed": seed, "out": out, "config": config}


@main.command()
@click.option("--out-dir", default=None)
@click.option("--spec-file", type=click.Path(), default=None,
              help="JSON list of scenario entries: [{kind, count, ...}]")
@click.option("--kind", default=None, help="single-scenario shortcut instead of --spec-file")
@click.option("--count", type=int, default=1)
@click.option("--duration-frames", type=int, default=50)
@click.option("--noise-px", type=float, default=0.0)
@click.option("--dropout-rate", type=float, default=0.0)
@click.option("--mode", default=None)
@click.option("--seed", type=int, default=None)
@click.pass_context
def synth(ctx, out_dir, spec_file, kind, count, duration_frames, noise_px, dropout_rate, mode, seed):
    """Generate a synthetic dataset directory."""
    if spec_file is not None:
        scenarios = json.loads(Path(spec_file).read_text())
    elif kind is not None:
        scenarios = [{
            "kind": kind, "count": count, "duration_frames": duration_frames,
            "noise_px": noise_px, "dropout_rate": dropout_rate,
        }]
    else:
        click.echo("error: provide --kind or --spec-file", err=True)
        sys.exit(2)
    _dispatch(ctx, "synth", {
        "out_dir": out_dir, "scenarios": scenarios, "mode": mode, "seed": seed,
    })


@main.command()
@click.option("--dataset", "dataset_dir", required=True)
@click.option("--out-dir", default=None)
@click.option("--family", type=click.Choice(["svm", "forest", "mlp"]), default="svm")
@click.option("--mode", default=None)
@click.option("--grid-file", type=click.Path(), default=None)
@click.option("--test-fraction", type=float, default=None)
@click.option("--k", type=int, default=None)
@click.option("--seed", type=int, default=None)
@click.pass_context
def train(ctx, dataset_dir, out_dir, family, mode, grid_file, test_fraction, k, seed):
    """Grid search + cross-validate + fit the final model."""
    _dispatch(ctx, "train", {
        "dataset_dir": dataset_dir, "out_dir": out_dir, "family": family, "mode": mode,
        "grid_file": grid_file, "test_fraction": test_fraction, "k": k, "seed": seed,
    })


@main.command()
@click.option("--dataset", "dataset_dir", required=True)
@click.option("--model", "model_path", required=True)
@click.option("--out-dir", default=None)
@click.pass_context
def calibrate(ctx, dataset_dir, model_path, out_dir):
    """Optimize the decision threshold on the model's training split."""
    _dispatch(ctx, "calibrate", {
        "dataset_dir": dataset_dir, "model_path": model_path, "out_dir": out_dir,
    })


@main.command(name="tune-delay")
@click.option("--dataset", "dataset_dir", required=True)
@click.option("--model", "model_path", required=True)
@click.option("--calibration", "calibration_path", default=None)
@click.option("--out-dir", default=None)
@click.pass_context
def tune_delay(ctx, dataset_dir, model_path, calibration_path, out_dir):
    """Grid-search the commitment delay on the model's training split."""
    _dispatch(ctx, "tune-delay", {
        "dataset_dir": dataset_dir, "model_path": model_path,
        "calibration_path": calibration_path, "out_dir": out_dir,
    })


@main.command()
@click.option("--dataset", "dataset_dir", required=True)
@click.option("--model", "model_path", required=True)
@click.option("--calibration", "calibration_path", default=None)
@click.option("--delay", "delay_path", default=None)
@click.option("--model-name", default=None)
@click.option("--out-dir", default=None)
@click.pass_context
def evaluate(ctx, dataset_dir, model_path, calibration_path, delay_path, model_name, out_dir):
    """Run the full chain on the held-out test split and write the report."""
    _dispatch(ctx, "evaluate", {
        "dataset_dir": dataset_dir, "model_path": model_path,
        "calibration_path": calibration_path, "delay_path": delay_path,
        "model_name": model_name, "out_dir": out_dir,
    })


@main.command()
@click.option("--stream", "stream_path", required=True)
@click.option("--model", "model_path", required=True)
@click.option("--calibration", "calibration_path", default=None)
@click.option("--delay", "delay_path", default=None)
@click.option("--delay-ms", type=int, default=None)
@click.option("--paced/--no-paced", default=False, help="sleep to the stream's frame period")
@click.option("--out-dir", default=None)
@click.pass_context
def replay(ctx, stream_path, model_path, calibration_path, delay_path, delay_ms, paced, out_dir):
    """Replay one stream file through the live pipeline and log events."""
    _dispatch(ctx, "replay", {
        "stream_path": stream_path, "model_path": model_path,
        "calibration_path": calibration_path, "delay_path": delay_path,
        "delay_ms": delay_ms, "paced": paced, "out_dir": out_dir,
    })


@main.command()
@click.option("--host", default="127.0.0.1")
@click.option("--port", type=int, default=8000)
def serve(host, port):
    """Run the HTTP service."""
    import uvicorn

    from .service.app import app

    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()

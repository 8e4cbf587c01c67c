import json
from pathlib import Path

import pytest
from click.testing import CliRunner

from emwatch.cli import main

SVM_GRID = [
    {"family": "svm", "params": {"C": 0.5, "kernel": "polynomial", "degree": 2, "gamma": "auto"}},
]


@pytest.fixture(scope="module")
def runner():
    return CliRunner()


@pytest.fixture(scope="module")
def workspace(runner, tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    spec_file = root / "scenarios.json"
    spec_file.write_text(json.dumps([
        {"kind": "walk", "count": 6, "noise_px": 1.0},
        {"kind": "fall_during_walk", "count": 8, "noise_px": 1.0},
    ]))
    grid_file = root / "grid.json"
    grid_file.write_text(json.dumps(SVM_GRID))

    synth = runner.invoke(main, [
        "synth", "--spec-file", str(spec_file), "--out-dir", str(root / "data"), "--seed", "2",
    ])
    assert synth.exit_code == 0, synth.output
    dataset_dir = json.loads(synth.output)["dataset_dir"]

    train = runner.invoke(main, [
        "train", "--dataset", dataset_dir, "--out-dir", str(root / "train"),
        "--grid-file", str(grid_file), "--k", "2", "--seed", "4", "--test-fraction", "0.3",
    ])
    assert train.exit_code == 0, train.output
    return {"root": root, "dataset": dataset_dir, "train": json.loads(train.output), "grid_file": grid_file}


def test_synth_then_train_outputs(workspace):
    assert Path(workspace["train"]["model_path"]).is_file()
    assert workspace["train"]["best_spec"]["params"]["degree"] == 2


def test_calibrate_tune_evaluate_chain(runner, workspace):
    root = workspace["root"]
    cal = runner.invoke(main, [
        "calibrate", "--dataset", workspace["dataset"],
        "--model", workspace["train"]["model_path"], "--out-dir", str(root / "cal"),
    ])
    assert cal.exit_code == 0, cal.output
    cal_body = json.loads(cal.output)
    assert cal_body["mode"] == "binary"

    delay = runner.invoke(main, [
        "tune-delay", "--dataset", workspace["dataset"],
        "--model", workspace["train"]["model_path"],
        "--calibration", cal_body["calibration_path"], "--out-dir", str(root / "delay"),
    ])
    assert delay.exit_code == 0, delay.output
    delay_body = json.loads(delay.output)

    ev = runner.invoke(main, [
        "evaluate", "--dataset", workspace["dataset"],
        "--model", workspace["train"]["model_path"],
        "--calibration", cal_body["calibration_path"],
        "--delay", delay_body["delay_path"], "--out-dir", str(root / "eval"),
    ])
    assert ev.exit_code == 0, ev.output
    report = json.loads(ev.output)["report"]
    assert report["delay_ms"] == delay_body["delay_ms"]


def test_replay_command(runner, workspace, tmp_path):
    manifest = json.loads((Path(workspace["dataset"]) / "manifest.json").read_text())
    vid = manifest["videos"][0]["id"]
    res = runner.invoke(main, [
        "replay", "--stream", str(Path(workspace["dataset"]) / f"{vid}.jsonl"),
        "--model", workspace["train"]["model_path"],
        "--delay-ms", "10", "--out-dir", str(tmp_path / "replay"),
    ])
    assert res.exit_code == 0, res.output
    assert json.loads(res.output)["frames"] == 50


def test_missing_dataset_exits_2(runner, tmp_path):
    res = runner.invoke(main, [
        "train", "--dataset", str(tmp_path / "absent"), "--out-dir", str(tmp_path / "out"),
    ])
    assert res.exit_code == 2
    assert "MissingManifest" in res.output


def test_missing_kind_and_specfile_exits_2(runner, tmp_path):
    res = runner.invoke(main, ["synth", "--out-dir", str(tmp_path / "d")])
    assert res.exit_code == 2


def test_global_seed_and_out_flags(runner, workspace, tmp_path):
    res = runner.invoke(main, [
        "--seed", "2", "--out", str(tmp_path / "d2"),
        "synth", "--kind", "walk", "--count", "1",
    ])
    assert res.exit_code == 0, res.output
    body = json.loads(res.output)
    assert body["n_videos"] == 1
    assert body["dataset_dir"].endswith("d2")


def test_config_file_defaults(runner, workspace, tmp_path):
    config = tmp_path / "config.json"
    config.write_text(json.dumps({
        "train": {
            "dataset_dir": workspace["dataset"],
            "out_dir": str(tmp_path / "train"),
            "grid_file": str(workspace["grid_file"]),
            "k": 2,
            "seed": 4,
            "test_fraction": 0.3,
        }
    }))
    res = runner.invoke(main, ["--config", str(config), "train", "--dataset", workspace["dataset"]])
    assert res.exit_code == 0, res.output
    assert json.loads(res.output)["family"] == "svm"


def test_url_mode_posts_to_service(runner, tmp_path, monkeypatch):
    from fastapi.testclient import TestClient

    from emwatch.service.app import create_app

    client = TestClient(create_app())

    def fake_post(url, json=None, timeout=None):
        return client.post(url.replace("http://svc", ""), json=json)

    monkeypatch.setattr("emwatch.cli.httpx.post", fake_post)
    res = runner.invoke(main, [
        "--url", "http://svc",
        "synth", "--kind", "walk", "--count", "1", "--out-dir", str(tmp_path / "d"),
    ])
    assert res.exit_code == 0, res.output
    assert json.loads(res.output)["n_videos"] == 1

    bad = runner.invoke(main, [
        "--url", "http://svc",
        "train", "--dataset", str(tmp_path / "absent"), "--out-dir", str(tmp_path / "out"),
    ])
    assert bad.exit_code == 2
    assert "MissingManifest" in bad.output


def test_rerun_same_seed_identical_cv(runner, workspace, tmp_path):
    args = [
        "train", "--dataset", workspace["dataset"], "--grid-file", str(workspace["grid_file"]),
        "--k", "2", "--seed", "4", "--test-fraction", "0.3",
    ]
    a = runner.invoke(main, args + ["--out-dir", str(tmp_path / "a")])
    b = runner.invoke(main, args + ["--out-dir", str(tmp_path / "b")])
    assert a.exit_code == 0 and b.exit_code == 0
    assert json.loads(a.output)["mean_cv_recalls"] == json.loads(b.output)["mean_cv_recalls"]

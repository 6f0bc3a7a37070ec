import json
import os

import numpy as np
import pytest

from deformspace import datagen, jsonio, nets, training
from deformspace.cli import run
from deformspace.geometry import load_xyz
from tests.conftest import TINY_WIDTHS


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    """Tiny dataset + trained checkpoint shared by the CLI tests."""
    root = tmp_path_factory.mktemp("cli")
    data = root / "data"
    shapes, manifest = datagen.gen_dataset("table", 12, 48, seed=7)
    datagen.save_dataset(data, shapes, manifest)
    model_path = root / "model.dsnc"
    cfg = training.TrainConfig(
        k=6, n=48, w_sparsity=1.0, epochs=4, batch_pairs=4, seed=5, widths=TINY_WIDTHS
    )
    training.train(shapes, cfg, out_path=model_path)
    ids = [s.id for s in shapes]
    return {"root": root, "data": data, "model": model_path, "ids": ids}


def test_datagen_summary_and_exit(tmp_path, capsys):
    out = tmp_path / "d"
    code = run(
        ["datagen", "--family", "table", "--count", "4", "--n", "32", "--out", str(out), "--seed", "3"]
    )
    assert code == 0
    summary = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
    assert summary["count"] == 4 and summary["command"] == "datagen"
    manifest = json.loads((out / "manifest.json").read_text())
    assert len(manifest["shapes"]) == 4


def test_usage_error_exit_code():
    assert run(["datagen", "--family", "nope", "--count", "4", "--n", "8", "--out", "x"]) == 1
    assert run(["no-such-command"]) == 1


def test_data_error_exit_code(tmp_path):
    assert run(
        ["train", "--data", str(tmp_path / "missing"), "--out", str(tmp_path / "m.dsnc")]
    ) == 2


def test_numerical_error_exit_code(workspace, tmp_path, capsys):
    code = run(
        [
            "train",
            "--data",
            str(workspace["data"]),
            "--out",
            str(tmp_path / "m.dsnc"),
            "--epochs",
            "3",
            "--lr",
            "1e300",
            "--k",
            "4",
        ]
    )
    assert code == 3


def test_transfer_zero_delta_identity(workspace, tmp_path, capsys):
    data = workspace["data"]
    a = data / "clouds" / f"{workspace['ids'][0]}.xyz"
    c = data / "clouds" / f"{workspace['ids'][1]}.xyz"
    out = tmp_path / "o.xyz"
    code = run(
        [
            "transfer",
            "--model",
            str(workspace["model"]),
            "--src",
            str(a),
            "--tgt",
            str(a),
            "--dst",
            str(c),
            "--out",
            str(out),
        ]
    )
    assert code == 0
    assert np.array_equal(load_xyz(out).points, load_xyz(c).points)


def test_project_deterministic_across_runs(workspace, tmp_path, capsys):
    args = [
        "project",
        "--model",
        str(workspace["model"]),
        "--data",
        str(workspace["data"]),
        "--shape",
        workspace["ids"][0],
        "--edit",
        "4=1.3",
    ]
    out1, out2 = tmp_path / "p1.json", tmp_path / "p2.json"
    assert run(args + ["--out", str(out1)]) == 0
    assert run(args + ["--out", str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()
    payload = json.loads(out1.read_text())
    assert payload["z_hat"][4] == 1.3


def test_export_dict_frames_and_linearity(workspace, tmp_path, capsys):
    out = tmp_path / "sweep"
    code = run(
        [
            "export-dict",
            "--model",
            str(workspace["model"]),
            "--data",
            str(workspace["data"]),
            "--shape",
            workspace["ids"][0],
            "--steps",
            "5",
            "--scale",
            "0.4",
            "--out",
            str(out),
        ]
    )
    assert code == 0
    model = nets.load_checkpoint(workspace["model"])
    files = sorted(f for f in os.listdir(out) if f.endswith(".xyz"))
    assert len(files) == model.k * 5
    assert (out / "dictionary.json").exists()
    base = load_xyz(workspace["data"] / "clouds" / f"{workspace['ids'][0]}.xyz").points
    mid = load_xyz(out / "elem_000_002.xyz").points  # alpha = 0
    assert np.abs(mid - base).max() < 1e-12
    lo = load_xyz(out / "elem_000_000.xyz").points  # alpha = -0.4
    hi = load_xyz(out / "elem_000_004.xyz").points  # alpha = +0.4
    assert np.abs((lo + hi) / 2 - base).max() < 1e-9  # negative frame mirrors positive about base


def test_dsn_seed_env_override(tmp_path, capsys, monkeypatch):
    out1, out2, out3 = tmp_path / "a", tmp_path / "b", tmp_path / "c"
    monkeypatch.setenv("DSN_SEED", "9")
    run(["datagen", "--family", "table", "--count", "3", "--n", "16", "--out", str(out1)])
    monkeypatch.delenv("DSN_SEED")
    run(["datagen", "--family", "table", "--count", "3", "--n", "16", "--out", str(out2), "--seed", "9"])
    run(["datagen", "--family", "table", "--count", "3", "--n", "16", "--out", str(out3), "--seed", "1"])
    assert (out1 / "manifest.json").read_bytes() == (out2 / "manifest.json").read_bytes()
    assert (out1 / "manifest.json").read_bytes() != (out3 / "manifest.json").read_bytes()


def test_flag_beats_env_beats_file(workspace, tmp_path, capsys, monkeypatch):
    cfg = tmp_path / "train.cfg"
    cfg.write_text("seed = 4\nepochs = 1\nk = 4\nbatch_pairs = 4\n")
    monkeypatch.setenv("DSN_SEED", "6")
    out = tmp_path / "m.dsnc"
    run(["train", "--data", str(workspace["data"]), "--out", str(out), "--config", str(cfg)])
    summary = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
    assert summary["seed"] == 6  # env beats file
    run(
        [
            "train",
            "--data",
            str(workspace["data"]),
            "--out",
            str(out),
            "--config",
            str(cfg),
            "--seed",
            "11",
        ]
    )
    summary = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
    assert summary["seed"] == 11  # flag beats env


def test_deform_command(workspace, tmp_path, capsys):
    data = workspace["data"]
    a = data / "clouds" / f"{workspace['ids'][0]}.xyz"
    b = data / "clouds" / f"{workspace['ids'][2]}.xyz"
    out = tmp_path / "d.xyz"
    assert run(
        ["deform", "--model", str(workspace["model"]), "--src", str(a), "--tgt", str(b), "--out", str(out)]
    ) == 0
    summary = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
    assert summary["chamfer_to_target"] >= 0
    assert load_xyz(out).n == 48


def test_eval_command_writes_report(workspace, tmp_path, capsys):
    out = tmp_path / "report.json"
    code = run(
        [
            "eval",
            "--model",
            str(workspace["model"]),
            "--data",
            str(workspace["data"]),
            "--out",
            str(out),
            "--fitting-pairs",
            "3",
            "--parallelogram-triples",
            "2",
            "--symmetry-trials",
            "3",
            "--two-way-pairs",
            "3",
            "--two-way-worst",
            "2",
            "--mmd-pairs",
            "2",
            "--mmd-targets",
            "1",
            "--mmd-reference",
            "3",
            "--seed",
            "0",
        ]
    )
    assert code == 0
    report = json.loads(out.read_text())
    assert set(report) >= {"fitting_cd", "mmd_cd", "cov_cd", "parallelogram_cd", "two_way"}


def test_json_writer_roundtrips_17_digits():
    vals = [0.1, 1.0, 1e-300, 123456789.123456789, -3.0303030303030304e-07]
    text = jsonio.dumps(vals)
    assert json.loads(text) == vals
    assert "1.0" in text  # integral floats keep their decimal point

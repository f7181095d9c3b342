"""End-to-end command line workflow on a tiny corpus."""
import json

import numpy as np
import pytest

from styledl.cli import main


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    data = root / "data"
    assert main(["gen-synth", "--seed", "3", "--n", "10", "--labels", "4",
                 "--size", "32", "--out", str(data)]) == 0
    cfg = root / "train.cfg"
    cfg.write_text("epochs=2\ninput_size=32\nablation=B\nflip=false\n")
    return root, data, cfg


def test_gen_synth_then_build_adj(workdir, capsys):
    root, data, _ = workdir
    assert main(["build-adj", "--manifest", str(data / "manifest.txt")]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 4
    rows = np.array([[float(v) for v in line.split()] for line in lines])
    np.testing.assert_allclose(rows.sum(axis=1), 1.0, atol=1e-9)
    out = root / "adj.txt"
    assert main(["build-adj", "--manifest", str(data / "manifest.txt"),
                 "--out", str(out)]) == 0
    assert np.loadtxt(out).shape == (4, 4)


def test_train_evaluate_predict_rank(workdir, capsys):
    root, data, cfg = workdir
    ckpt = root / "model.ckpt"
    manifest = str(data / "manifest.txt")
    assert main(["train", "--config", str(cfg), "--manifest", manifest,
                 "--out", str(ckpt)]) == 0
    out = capsys.readouterr().out
    assert "epoch    1" in out and "epoch    2" in out

    report_path = root / "ours.json"
    assert main(["evaluate", "--checkpoint", str(ckpt), "--manifest", manifest,
                 "--json", str(report_path), "--name", "Ours"]) == 0
    doc = json.loads(report_path.read_text())
    assert doc["name"] == "Ours" and doc["n"] == 10
    capsys.readouterr()

    assert main(["predict", "--checkpoint", str(ckpt),
                 "--image", str(data / "sample_0000.ppm")]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    probs = [float(line.split()[-1]) for line in lines]
    assert len(probs) == 4 and abs(sum(probs) - 1.0) < 1e-3

    knn_path = root / "knn.json"
    assert main(["baseline-knn", "--train", manifest, "--test", manifest,
                 "--k", "3", "--size", "32", "--json", str(knn_path)]) == 0
    capsys.readouterr()

    assert main(["rank", "--reports", str(report_path), str(knn_path)]) == 0
    table = capsys.readouterr().out
    assert "Ours" in table and "AA-kNN(k=3)" in table and "(1)" in table


def test_train_ablation_override(workdir):
    root, data, cfg = workdir
    out = root / "bg.ckpt"
    assert main(["train", "--config", str(cfg), "--manifest",
                 str(data / "manifest.txt"), "--out", str(out),
                 "--ablation", "B+G"]) == 0
    from styledl.training import Checkpoint
    assert Checkpoint.load(out).config.ablation == "B+G"


def test_cli_reports_errors_not_tracebacks(workdir, capsys):
    root, data, cfg = workdir
    assert main(["train", "--config", str(cfg), "--manifest",
                 str(data / "manifest.txt"), "--out", str(root / "x.ckpt"),
                 "--ablation", "bogus"]) == 1
    assert "error:" in capsys.readouterr().err
    assert main(["evaluate", "--checkpoint", str(root / "missing.ckpt"),
                 "--manifest", str(data / "manifest.txt")]) == 1

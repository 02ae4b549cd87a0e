import json

import numpy as np
import pytest
from click.testing import CliRunner

from simplexmap.cli import main


@pytest.fixture(scope="module")
def runner():
    return CliRunner()


@pytest.fixture(scope="module")
def workdir(tmp_path_factory, runner):
    """Shared fixture tree: synthetic train/test CSVs and a trained model."""
    root = tmp_path_factory.mktemp("cli")
    train_csv = root / "train.csv"
    test_csv = root / "test.csv"
    model = root / "model.json"
    r = runner.invoke(main, ["synth", "--count", "40", "--seed", "1",
                             "--out", str(train_csv)])
    assert r.exit_code == 0, r.output
    r = runner.invoke(main, ["synth", "--count", "300", "--seed", "2",
                             "--out", str(test_csv)])
    assert r.exit_code == 0, r.output
    r = runner.invoke(main, ["train", "--data", str(train_csv), "--label-col",
                             "label", "--gamma", "1.0", "--seed", "3",
                             "--out", str(model)])
    assert r.exit_code == 0, r.output
    return root


def read_csv_rows(path):
    lines = [l for l in path.read_text().splitlines() if not l.startswith("#")]
    header = lines[0].split(",")
    return header, [l.split(",") for l in lines[1:]]


def test_synth_output_schema_and_determinism(runner, workdir, tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for p in (a, b):
        r = runner.invoke(main, ["synth", "--count", "25", "--seed", "9",
                                 "--out", str(p)])
        assert r.exit_code == 0
    assert a.read_bytes() == b.read_bytes()
    header, rows = read_csv_rows(a)
    assert header == ["x1", "x2", "label"]
    assert len(rows) == 25
    assert "# seed=9" in a.read_text()


def test_train_writes_versioned_model(workdir):
    doc = json.loads((workdir / "model.json").read_text())
    assert doc["format_version"] == 1
    assert doc["n_classes"] == 4
    assert doc["seed"] == 3
    assert doc["transform"]["beta"] == 1.0


def test_train_missing_file_exits_2(runner, tmp_path):
    r = runner.invoke(main, ["train", "--data", str(tmp_path / "nope.csv"),
                             "--label-col", "label", "--out", str(tmp_path / "m")])
    assert r.exit_code == 2


def test_train_constraint_violation_exits_2(runner, workdir, tmp_path):
    r = runner.invoke(main, ["train", "--data", str(workdir / "train.csv"),
                             "--label-col", "label", "--k-beta", "50",
                             "--out", str(tmp_path / "m.json")])
    assert r.exit_code == 2
    assert "k_beta" in r.output


def test_train_conflicting_weight_flags_exit_2(runner, workdir, tmp_path):
    r = runner.invoke(main, ["train", "--data", str(workdir / "train.csv"),
                             "--label-col", "label", "--gamma", "0.5",
                             "--alpha", "1.0", "--out", str(tmp_path / "m.json")])
    assert r.exit_code == 2


def test_train_non_numeric_data_exits_3(runner, tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("x,label\n1.0,a\nzzz,b\n")
    r = runner.invoke(main, ["train", "--data", str(bad), "--label-col", "label",
                             "--out", str(tmp_path / "m.json")])
    assert r.exit_code == 3


def test_predict_rows_and_determinism(runner, workdir, tmp_path):
    out1, out2 = tmp_path / "p1.csv", tmp_path / "p2.csv"
    args = ["predict", "--model", str(workdir / "model.json"),
            "--data", str(workdir / "test.csv"), "--label-col", "label",
            "--proba", "--mc-samples", "1000", "--seed", "4"]
    for out in (out1, out2):
        r = runner.invoke(main, args + ["--out", str(out)])
        assert r.exit_code == 0, r.output
    assert out1.read_bytes() == out2.read_bytes()
    header, rows = read_csv_rows(out1)
    assert header[:2] == ["row", "label"]
    assert header[2:] == ["p_1", "p_2", "p_3", "p_4"]
    for row in rows:
        probs = np.array(list(map(float, row[2:])))
        assert probs.sum() == pytest.approx(1.0, abs=1e-12)
        assert row[1] in {"1", "2", "3", "4"}


def test_predict_binary_closed_form_ignores_mc_samples(runner, tmp_path):
    train = tmp_path / "bin.csv"
    rows = ["x,label"] + [f"{v},{l}" for v, l in
                          [(0.0, "n"), (0.4, "n"), (1.2, "p"), (1.8, "p"), (2.5, "p")]]
    train.write_text("\n".join(rows) + "\n")
    model = tmp_path / "bin-model.json"
    r = runner.invoke(main, ["train", "--data", str(train), "--label-col", "label",
                             "--gamma", "1.0", "--out", str(model)])
    assert r.exit_code == 0, r.output
    outs = []
    for i, s in enumerate((200, 50_000)):
        out = tmp_path / f"bp{i}.csv"
        r = runner.invoke(main, ["predict", "--model", str(model), "--data",
                                 str(train), "--label-col", "label", "--proba",
                                 "--mc-samples", str(s), "--out", str(out)])
        assert r.exit_code == 0, r.output
        outs.append([l.split(",")[2:] for l in out.read_text().splitlines()
                     if not l.startswith("#")][1:])
    assert outs[0] == outs[1]


def test_evaluate_report(runner, workdir, tmp_path):
    out = tmp_path / "report.json"
    r = runner.invoke(main, ["evaluate", "--model", str(workdir / "model.json"),
                             "--data", str(workdir / "test.csv"),
                             "--label-col", "label", "--mc-samples", "1000",
                             "--seed", "5", "--top-k", "1", "--top-k", "2",
                             "--out", str(out)])
    assert r.exit_code == 0, r.output
    doc = json.loads(out.read_text())
    assert doc["format_version"] == 1 and doc["seed"] == 5
    assert 0.0 <= doc["accuracy"] <= 1.0
    assert doc["proba_loss"] <= 1.0
    conf = np.array(doc["confusion"])
    assert conf.sum() == 300
    assert doc["top_k"]["2"] >= doc["top_k"]["1"]
    assert doc["top_k"]["1"] == pytest.approx(np.trace(conf) / conf.sum(), abs=1e-12)


def test_evaluate_unknown_label_exits_3(runner, workdir, tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("x1,x2,label\n0.1,0.2,7\n")
    r = runner.invoke(main, ["evaluate", "--model", str(workdir / "model.json"),
                             "--data", str(bad), "--label-col", "label",
                             "--out", str(tmp_path / "r.json")])
    assert r.exit_code == 3


def test_calibrate_binary_only(runner, workdir, tmp_path):
    r = runner.invoke(main, ["calibrate", "--model", str(workdir / "model.json"),
                             "--data", str(workdir / "test.csv"),
                             "--label-col", "label",
                             "--out", str(tmp_path / "c.json")])
    assert r.exit_code == 2
    assert "binary" in r.output


def test_calibrate_on_binary_model(runner, tmp_path):
    rng = np.random.default_rng(6)
    x = rng.uniform(-1, 1, size=60)
    lines = ["x,label"] + [f"{v},{'a' if v >= 0 else 'b'}" for v in x]
    data = tmp_path / "bin.csv"
    data.write_text("\n".join(lines) + "\n")
    model = tmp_path / "m.json"
    r = runner.invoke(main, ["train", "--data", str(data), "--label-col", "label",
                             "--out", str(model)])
    assert r.exit_code == 0, r.output
    out = tmp_path / "cal.json"
    r = runner.invoke(main, ["calibrate", "--model", str(model), "--data",
                             str(data), "--label-col", "label", "--out", str(out)])
    assert r.exit_code == 0, r.output
    doc = json.loads(out.read_text())
    assert doc["area_deviation"] >= 0.0
    assert sum(b["count"] for b in doc["bins"]) == 60
    for b in doc["bins"]:
        assert 0.0 <= b["mean_predicted"] <= 1.0


def test_tune_reports_grid(runner, workdir, tmp_path):
    out = tmp_path / "tune.json"
    r = runner.invoke(main, ["tune", "--data", str(workdir / "train.csv"),
                             "--label-col", "label", "--gamma", "0.5",
                             "--gamma", "1.0", "--folds", "3",
                             "--mc-samples", "400", "--seed", "6",
                             "--out", str(out)])
    assert r.exit_code == 0, r.output
    doc = json.loads(out.read_text())
    assert doc["best"]["beta"] in (0.5, 1.0)
    assert len(doc["results"]) == 2
    scores = [x["log_loss"] for x in doc["results"]]
    assert min(scores) == next(
        x["log_loss"] for x in doc["results"]
        if x["gamma"] == doc["best"]["beta"])


def test_viz_outputs(runner, workdir, tmp_path):
    out = tmp_path / "viz.csv"
    r = runner.invoke(main, ["viz", "--model", str(workdir / "model.json"),
                             "--data", str(workdir / "test.csv"),
                             "--label-col", "label", "--out", str(out)])
    assert r.exit_code == 0, r.output
    header, rows = read_csv_rows(out)
    assert header == ["row", "latent_1", "latent_2", "latent_3",
                      "compressed_1", "compressed_2", "compressed_3",
                      "bary_1", "bary_2", "bary_3", "bary_4",
                      "true_label", "predicted_label"]
    for row in rows[:20]:
        bary = np.array(list(map(float, row[7:11])))
        assert bary.sum() == pytest.approx(1.0, abs=1e-9)
        assert np.all(bary > 0) and np.all(bary < 1)


def test_viz_use_transform_places_training_points_in_own_segment(runner, workdir, tmp_path):
    out = tmp_path / "viz-train.csv"
    r = runner.invoke(main, ["viz", "--model", str(workdir / "model.json"),
                             "--data", str(workdir / "train.csv"),
                             "--label-col", "label", "--use-transform",
                             "--out", str(out)])
    assert r.exit_code == 0, r.output
    header, rows = read_csv_rows(out)
    for row in rows:
        bary = np.array(list(map(float, row[7:11])))
        true_label = int(row[11])
        assert int(np.argmax(bary)) + 1 == true_label


def test_viz_use_transform_requires_labels(runner, workdir, tmp_path):
    r = runner.invoke(main, ["viz", "--model", str(workdir / "model.json"),
                             "--data", str(workdir / "test.csv"),
                             "--use-transform", "--out", str(tmp_path / "v.csv")])
    assert r.exit_code == 2

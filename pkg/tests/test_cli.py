import csv
import json
import subprocess
import sys

import pytest

from hotspot_topics.cli import main

SMALL_SPEC = {"n_communities": 3, "vocab_size": 8, "n_cells": 30, "obs_per_cell": 25, "seed": 2}


@pytest.fixture
def small_csv(tmp_path):
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps(SMALL_SPEC))
    out = tmp_path / "data.csv"
    assert main(["synth", "--spec-file", str(spec), "--out-csv", str(out)]) == 0
    return out


def _train(csv_path, out, *extra):
    return main(["train", "--input", str(csv_path), "--regime", "halves", "--sweeps", "3",
                 "--gamma", "1e-3", "--out-model", str(out), *extra])


def test_synth_train_evaluate_pipeline(small_csv, tmp_path):
    model = tmp_path / "m.json"
    assert _train(small_csv, model, "--seed", "1") == 0
    pr, report = tmp_path / "pr.csv", tmp_path / "rep.json"
    rc = main(["evaluate", "--input", str(small_csv), "--regime", "halves", "--strategy", "topic",
               "--model", str(model), "--targets", "0,1", "--n-hotspots", "3", "--test-sweeps", "2",
               "--out-pr", str(pr), "--out-report", str(report)])
    assert rc == 0
    rows = list(csv.DictReader(pr.open()))
    assert rows and list(rows[0]) == ["strategy", "taxon", "tau", "tp", "fp", "fn", "tn", "precision", "recall"]
    assert {r["taxon"] for r in rows} == {"0", "1", "all"}
    rep = json.loads(report.read_text())
    assert 0.0 <= rep["auc"] <= 1.0


def test_standard_fixture_synth(tmp_path):
    out, truth = tmp_path / "std.csv", tmp_path / "truth.json"
    assert main(["synth", "--out-csv", str(out), "--out-truth", str(truth), "--seed", "4"]) == 0
    assert len(out.read_text().splitlines()) == 201
    assert json.loads(truth.read_text())["spec"]["seed"] == 4


def test_predict_writes_field_and_hotspots(small_csv, tmp_path):
    model = tmp_path / "m.json"
    assert _train(small_csv, model) == 0
    field, hot = tmp_path / "f.csv", tmp_path / "h.csv"
    rc = main(["predict", "--model", str(model), "--input", str(small_csv), "--target-taxon", "2",
               "--sigma", "15000", "--tau", "0.05", "--test-sweeps", "2", "--out-field", str(field),
               "--out-hotspots", str(hot)])
    assert rc == 0
    assert field.read_text().splitlines()[0] == "t_idx,e_idx,n_idx,value"
    assert hot.read_text().splitlines()[0] == "t_idx,e_idx,n_idx"


def test_predict_taxon_out_of_range(small_csv, tmp_path, capsys):
    model = tmp_path / "m.json"
    assert _train(small_csv, model) == 0
    rc = main(["predict", "--model", str(model), "--input", str(small_csv), "--target-taxon", "99",
               "--out-field", str(tmp_path / "f.csv"), "--out-hotspots", str(tmp_path / "h.csv")])
    assert rc == 1
    assert "taxon id out of range" in capsys.readouterr().err
    assert not (tmp_path / "f.csv").exists()


def test_kmeans_reports_k_from_model(small_csv, tmp_path, capsys):
    model = tmp_path / "m.json"
    assert _train(small_csv, model) == 0
    k = len(json.loads(model.read_text())["topic_taxon_counts"])
    report = tmp_path / "rep.json"
    rc = main(["evaluate", "--input", str(small_csv), "--regime", "halves", "--strategy", "kmeans",
               "--model", str(model), "--n-hotspots", "3", "--out-pr", str(tmp_path / "pr.csv"),
               "--out-report", str(report)])
    assert rc == 0
    rep = json.loads(report.read_text())
    assert rep["K"] == k and rep["K_source"] == "model"
    assert f"K={k}" in capsys.readouterr().out


def test_kmeans_without_k_is_input_error(small_csv, tmp_path):
    rc = main(["evaluate", "--input", str(small_csv), "--strategy", "kmeans", "--out-pr", str(tmp_path / "p.csv")])
    assert rc == 1


def test_nn_and_sweep(small_csv, tmp_path):
    assert main(["evaluate", "--input", str(small_csv), "--strategy", "nn", "--n-hotspots", "3",
                 "--out-pr", str(tmp_path / "nn.csv")]) == 0
    grid = tmp_path / "grid.json"
    grid.write_text(json.dumps({"alphas": [0.1], "betas": [0.1, 1.0], "gammas": [1e-3], "sigmas": [0.0],
                                "n_hotspots": 3, "n_sweeps": 2, "test_sweeps": 2}))
    report = tmp_path / "sweep.json"
    assert main(["sweep", "--input", str(small_csv), "--regime", "split", "--grid-file", str(grid),
                 "--out-report", str(report)]) == 0
    rep = json.loads(report.read_text())
    assert rep["regime"] == "halves" and len(rep["per_config"]) == 2
    assert {"alpha", "beta", "gamma", "sigma", "K_learned", "auc", "per_taxon_auc"} <= set(rep["best"])


@pytest.mark.parametrize("argv", [["train", "--bogus"], ["frobnicate"], [], ["synth"]])
def test_usage_errors_exit_1(argv):
    assert main(argv) == 1


def test_missing_input_file_exit_1(tmp_path):
    assert main(["train", "--input", str(tmp_path / "none.csv"), "--out-model", str(tmp_path / "m.json")]) == 1


def test_train_is_byte_identical(small_csv, tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert _train(small_csv, a, "--seed", "7") == 0
    assert _train(small_csv, b, "--seed", "7") == 0
    assert a.read_bytes() == b.read_bytes()


def test_seed_env_default_and_override(small_csv, tmp_path, monkeypatch):
    a, b, c = tmp_path / "a.json", tmp_path / "b.json", tmp_path / "c.json"
    monkeypatch.setenv("HOTSPOT_SEED", "7")
    assert _train(small_csv, a) == 0
    assert _train(small_csv, c, "--seed", "8") == 0
    monkeypatch.delenv("HOTSPOT_SEED")
    assert _train(small_csv, b, "--seed", "7") == 0
    assert a.read_bytes() == b.read_bytes()
    assert json.loads(c.read_text())["rng_seed"] == 8
    monkeypatch.setenv("HOTSPOT_SEED", "abc")
    assert _train(small_csv, a) == 1


def test_module_entry_point(tmp_path):
    out = tmp_path / "s.csv"
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps(SMALL_SPEC))
    r = subprocess.run([sys.executable, "-m", "hotspot_topics", "synth", "--spec-file", str(spec),
                        "--out-csv", str(out)], capture_output=True, text=True)
    assert r.returncode == 0, r.stderr
    assert out.exists()

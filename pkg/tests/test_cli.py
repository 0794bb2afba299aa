import csv
import json

import numpy as np
import pytest

from grassforecast import serialize
from grassforecast.arima import ArimaModel, ArimaOrder
from grassforecast.cli import main, parse_config
from grassforecast.data import SyntheticSpec, generate_synthetic, load_csv, split, write_csv
from grassforecast.models import ArimaConfig, fit_forecaster
from grassforecast.nn import MlpConfig


def run(*argv):
    try:
        return main([str(a) for a in argv])
    except SystemExit as exc:
        return exc.code


@pytest.fixture(scope="module")
def data_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "series.csv"
    write_csv(generate_synthetic(SyntheticSpec(length=300, seed=7)), path)
    return path


def read_json(path):
    return json.loads(path.read_text())


def strip_timing(doc):
    """Drop the fields documented as wall-clock dependent."""
    if isinstance(doc, dict):
        return {
            k: strip_timing(v)
            for k, v in doc.items()
            if k not in ("runtime_seconds", "started_at", "finished_at")
        }
    if isinstance(doc, list):
        return [strip_timing(v) for v in doc]
    return doc


# -------------------------------------------------------------------- parsing


def test_parse_config_forms(tmp_path):
    assert parse_config("{p:2,d:1,q:2}") == {"p": 2, "d": 1, "q": 2}
    assert parse_config('{"layer_sizes": [5, 10]}') == {"layer_sizes": [5, 10]}
    f = tmp_path / "c.json"
    f.write_text('{"lag": 3}')
    assert parse_config(str(f)) == {"lag": 3}
    assert parse_config(None) == {}


def test_usage_errors_exit_2(data_file, tmp_path, capsys):
    assert run("train", "--model", "mlp") == 2
    assert run("train", "--model", "nope", "--data", data_file) == 2
    assert run("train", "--model", "mlp", "--data", data_file, "--config", "{bogus:1}") == 2
    missing = tmp_path / "absent.csv"
    assert run("train", "--model", "arima", "--data", missing) == 2
    assert str(missing) in capsys.readouterr().err
    assert run("gridsearch", "--model", "arima", "--data", data_file, "--epochs", "3") == 2


def test_bad_env_seed_exits_2(data_file, monkeypatch):
    monkeypatch.setenv("GRASSFORECAST_SEED", "seven")
    assert run("train", "--model", "mlp", "--data", data_file, "--epochs", "1") == 2


# ------------------------------------------------------------------- generate


def test_generate_is_deterministic(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run("generate", "--length", 1757, "--period", 52, "--seed", 7, "--out", a) == 0
    assert run("generate", "--length", 1757, "--period", 52, "--seed", 7, "--out", b) == 0
    assert a.read_bytes() == b.read_bytes()
    assert len(load_csv(a)) == 1757
    assert run("generate", "--length", 10, "--out", tmp_path / "c.csv") == 2


def test_generate_seed_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("GRASSFORECAST_SEED", "7")
    run("generate", "--length", 100, "--out", tmp_path / "env.csv")
    run("generate", "--length", 100, "--seed", 7, "--out", tmp_path / "flag.csv")
    assert (tmp_path / "env.csv").read_bytes() == (tmp_path / "flag.csv").read_bytes()


# ---------------------------------------------------------------------- train


def test_train_arima_report(data_file, tmp_path):
    report = tmp_path / "r.json"
    assert run("train", "--model", "arima", "--data", data_file, "--config", "{p:2,d:1,q:2}", "--report", report) == 0
    doc = read_json(report)
    assert doc["schema_version"] == 1
    assert doc["splits"]["sizes"] == {"train": 180, "val": 60, "test": 60}
    for part in ("val", "test"):
        assert np.isfinite(doc["metrics"][part]["rmse"]) and np.isfinite(doc["metrics"][part]["mae"])
    assert len(doc["test_predictions"]) == 60
    assert set(doc["residual_diagnostics"]) >= {"sigma2_normalized", "residual_mean_normalized", "residual_lag1_autocorr", "stationary", "invertible"}
    assert doc["manifest"]["config"] == {"family": "arima", "p": 2, "d": 1, "q": 2, "max_iter": 2000, "tol": 1e-8}
    assert "loss_curves" not in doc


def test_train_reruns_are_identical(data_file, tmp_path):
    docs, models = [], []
    for i in range(2):
        report, model = tmp_path / f"r{i}.json", tmp_path / f"m{i}.json"
        args = ("train", "--model", "gru", "--data", data_file, "--config", '{"hidden_sizes": [4], "lag": 3}')
        assert run(*args, "--epochs", 3, "--seed", 5, "--out-model", model, "--report", report) == 0
        docs.append(strip_timing(read_json(report)))
        models.append(model.read_bytes())
    docs[1]["manifest"]["args"] = docs[0]["manifest"]["args"] = None
    docs[1]["model_file"] = docs[0]["model_file"]
    assert docs[0] == docs[1]
    assert models[0] == models[1]


def test_numerical_failure_exits_3(data_file, tmp_path):
    cfg = '{"learning_rate": 1e8, "batch_size": 2}'
    assert run("train", "--model", "mlp", "--data", data_file, "--config", cfg, "--epochs", 3, "--report", tmp_path / "r.json") == 3


# ----------------------------------------------------------------- gridsearch


def test_gridsearch_arima_paper_grid(data_file, tmp_path):
    report = tmp_path / "g.json"
    assert run("gridsearch", "--model", "arima", "--data", data_file, "--report", report) == 0
    grid = read_json(report)["grid"]
    assert len(grid["runs"]) == grid["n_configs"] == 27
    assert grid["reported_count"] == 64
    assert any("64" in note for note in grid["notes"])
    assert set(grid["aggregates"]) == {"p", "d", "q"}
    assert sum(grid["status_counts"].values()) == 27


def test_gridsearch_tcn_paper_grid_has_486_runs(tmp_path):
    data = tmp_path / "s.csv"
    write_csv(generate_synthetic(SyntheticSpec(length=60, seed=1)), data)
    report = tmp_path / "g.json"
    assert run("gridsearch", "--model", "tcn", "--data", data, "--epochs", 1, "--workers", 4, "--report", report) == 0
    assert len(read_json(report)["grid"]["runs"]) == 486


def test_gridsearch_worker_independence(data_file, tmp_path):
    grid = tmp_path / "grid.json"
    grid.write_text(json.dumps({"family": "mlp", "axes": {"layer_sizes": [[3], [4, 4]], "lag": [2, 3]}, "base": {"epochs": 2}}))
    docs = []
    for workers in (1, 4):
        report = tmp_path / f"g{workers}.json"
        assert run("gridsearch", "--model", "mlp", "--grid", grid, "--data", data_file, "--workers", workers, "--seed", 3, "--report", report) == 0
        docs.append(strip_timing(read_json(report)))
    assert docs[0]["grid"] == docs[1]["grid"]
    assert docs[0]["metrics"] == docs[1]["metrics"]
    assert set(docs[0]["grid"]["aggregates"]) == {"layers", "lag"}


# ------------------------------------------------------------------- forecast


def write_model(fc, path):
    serialize.save(fc, path)
    return path


def forecast_heights(model, data, steps, tmp_path):
    report = tmp_path / "f.json"
    assert run("forecast", "--model-file", model, "--data", data, "--steps", steps, "--report", report) == 0
    return [row["height"] for row in read_json(report)["forecast"]]


def test_forecast_persistence_model(data_file, tmp_path):
    series = load_csv(data_file)
    fc = fit_forecaster(ArimaConfig(0, 1, 0), split(series))
    fc.model = ArimaModel(ArimaOrder(0, 1, 0), 0.0, [], [])
    model = write_model(fc, tmp_path / "rw.json")
    heights = forecast_heights(model, data_file, 3, tmp_path)
    assert heights == pytest.approx([series.values[-1]] * 3, abs=1e-12)


def test_forecast_zero_mlp_returns_train_minimum(data_file, tmp_path):
    series = load_csv(data_file)
    parts = split(series)
    fc = fit_forecaster(MlpConfig(layer_sizes=(3,), lag=2, epochs=1), parts)
    for v in fc.model.params.values():
        v[...] = 0.0
    heights = forecast_heights(write_model(fc, tmp_path / "zero.json"), data_file, 4, tmp_path)
    assert heights == [parts.train.values.min()] * 4


@pytest.mark.parametrize("model, config", [("arima", "{p:2,d:1,q:1}"), ("lstm", '{"hidden_sizes": [4], "lag": 3}')])
def test_one_step_forecast_matches_test_prediction(model, config, data_file, tmp_path):
    saved, report = tmp_path / "m.json", tmp_path / "r.json"
    extra = ("--epochs", 3) if model != "arima" else ()
    assert run("train", "--model", model, "--data", data_file, "--config", config, *extra, "--out-model", saved, "--report", report) == 0
    last = read_json(report)["test_predictions"][-1]
    series = load_csv(data_file)
    head = tmp_path / "head.csv"
    write_csv(series[: len(series) - 1], head)
    got = forecast_heights(saved, head, 1, tmp_path)[0]
    assert got == pytest.approx(last, rel=1e-12, abs=1e-12)


def test_forecast_missing_model_exits_2(data_file, tmp_path):
    assert run("forecast", "--model-file", tmp_path / "none.json", "--data", data_file) == 2


# ----------------------------------------------------------------- losscurves


@pytest.mark.parametrize(
    "model, config, epochs",
    [
        ("mlp", '{"layer_sizes": [4]}', 50),
        ("tcn", '{"filters": 4, "kernel_size": 2, "blocks": 2, "dilations": [1, 2]}', 30),
    ],
)
def test_losscurves_rows(model, config, epochs, data_file, tmp_path):
    report, out = tmp_path / "r.json", tmp_path / "c.csv"
    assert run("train", "--model", model, "--data", data_file, "--config", config, "--report", report) == 0
    assert run("losscurves", "--report", report, "--out", out) == 0
    rows = list(csv.reader(out.open()))
    assert rows[0] == ["epoch", "train_loss", "val_loss"]
    assert len(rows) - 1 == epochs
    assert [int(r[0]) for r in rows[1:]] == list(range(1, epochs + 1))


def test_losscurves_rejects_arima_report(data_file, tmp_path):
    report = tmp_path / "r.json"
    run("train", "--model", "arima", "--data", data_file, "--config", "{p:1,d:1,q:1}", "--report", report)
    assert run("losscurves", "--report", report) == 2


def test_manifest_reproduces_metrics(data_file, tmp_path):
    first = tmp_path / "a.json"
    cfg = '{"hidden_sizes": [3], "lag": 2}'
    assert run("train", "--model", "lstm", "--data", data_file, "--config", cfg, "--epochs", 2, "--seed", 8, "--report", first) == 0
    manifest = read_json(first)["manifest"]
    again = tmp_path / "b.json"
    config = json.dumps(manifest["config"])
    family = manifest["config"]["family"]
    assert run("train", "--model", family, "--data", manifest["data"]["path"], "--config", config, "--seed", manifest["seed"], "--report", again) == 0
    assert read_json(again)["metrics"] == read_json(first)["metrics"]

"""Command-line entry point: ``grassforecast <command> ...``.

Exit codes: 0 success, 2 usage or configuration error, 3 numerical failure
(non-convergence, divergence, every grid run failed).

Reports are single JSON documents (``schema_version`` 1). Timing fields
(``runtime_seconds``, ``manifest.started_at`` / ``finished_at``) are the
only parts that differ between identical invocations.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import hashlib
import json
import os
import re
import sys
import time
import warnings
from pathlib import Path

import numpy as np

from . import __version__, serialize
from .arima import ArimaModel
from .data import SplitSpec, SyntheticSpec, generate_synthetic, load_csv, split, write_csv
from .errors import ConfigError, ForecastError, NumericalFailure
from .models import config_digest, config_from_dict, config_to_dict, run_experiment
from .tuning import enumerate_grid, load_grid, paper_grid, run_grid

SCHEMA_VERSION = 1
SEED_ENV = "GRASSFORECAST_SEED"
MIN_GENERATE_LENGTH = 50


class UsageError(ForecastError):
    pass


def _default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"{SEED_ENV}={raw!r} is not an integer") from None


def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


def _file_digest(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def parse_config(text: str | None) -> dict:
    """Accept a JSON object, a path to one, or relaxed ``{p:2,d:1}`` syntax."""
    if text is None:
        return {}
    candidate = Path(text)
    if not text.lstrip().startswith("{") and candidate.exists():
        text = candidate.read_text(encoding="utf-8")
    try:
        value = json.loads(text)
    except json.JSONDecodeError:
        quoted = re.sub(r"([{,]\s*)([A-Za-z_]\w*)\s*:", r'\1"\2":', text)
        try:
            value = json.loads(quoted)
        except json.JSONDecodeError:
            raise ConfigError(f"cannot parse config {text!r}") from None
    if not isinstance(value, dict):
        raise ConfigError("config must be a JSON object")
    return value


def _load_series(path: str):
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"data file not found: {p}")
    return p, load_csv(p)


def _write_json(doc: dict, path: str | None) -> None:
    text = json.dumps(doc, indent=2, sort_keys=False, allow_nan=False) + "\n"
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _metrics_block(res: dict) -> dict:
    block = {}
    for which, rep in res["metrics"].items():
        block[which] = {"rmse": rep.rmse, "mae": rep.mae, "n": rep.n}
    return block


def _baseline_block(res: dict) -> dict:
    return {which: {"rmse": rep.rmse, "mae": rep.mae} for which, rep in res["baseline"].items()}


def _residual_diagnostics(model: ArimaModel) -> dict:
    e = model.residuals
    lag1 = float(np.corrcoef(e[:-1], e[1:])[0, 1]) if e.size > 2 and e.std() > 0 else 0.0
    return {
        "order": [model.order.p, model.order.d, model.order.q],
        "c": model.c,
        "phi": model.phi.tolist(),
        "theta": model.theta.tolist(),
        "sigma2_normalized": model.sigma2,
        "residual_mean_normalized": float(e.mean()),
        "residual_lag1_autocorr": lag1,
        "stationary": model.is_stationary(),
        "invertible": model.is_invertible(),
        "iterations": model.iterations,
    }


def _manifest(command: str, args: dict, data_path: Path, series, seed, config=None, grid=None) -> dict:
    doc = {
        "command": command,
        "args": args,
        "data": {
            "path": str(data_path),
            "sha256": _file_digest(data_path),
            "length": len(series),
            "start_week": series.start_index,
        },
        "seed": seed,
        "toolkit_version": __version__,
    }
    if config is not None:
        doc["config"] = config_to_dict(config)
        doc["config_digest"] = config_digest(config)
    if grid is not None:
        canonical = json.dumps(grid.to_dict(), sort_keys=True, separators=(",", ":"))
        doc["grid_digest"] = hashlib.sha256(canonical.encode()).hexdigest()[:16]
    return doc


# ---------------------------------------------------------------- commands


def cmd_generate(args) -> int:
    if args.length < MIN_GENERATE_LENGTH:
        raise UsageError(f"--length must be at least {MIN_GENERATE_LENGTH}")
    if args.noise < 0:
        raise UsageError("--noise must be non-negative")
    if args.period <= 0:
        raise UsageError("--period must be positive")
    spec = SyntheticSpec(
        length=args.length,
        period=args.period,
        amplitude=args.amplitude,
        trend=args.trend,
        noise=args.noise,
        level=args.level,
        seed=args.seed,
    )
    write_csv(generate_synthetic(spec), args.out)
    return 0


def _resolve_config(family: str, raw: dict, seed: int, epochs: int | None):
    values = dict(raw)
    if family != "arima":
        values["seed"] = seed
        if epochs is not None:
            values["epochs"] = epochs
    elif epochs is not None:
        raise UsageError("--epochs does not apply to arima")
    return config_from_dict(family, values)


def cmd_train(args) -> int:
    started = _now()
    data_path, series = _load_series(args.data)
    seed = args.seed if args.seed is not None else _default_seed()
    config = _resolve_config(args.model, parse_config(args.config), seed, args.epochs)
    splits = split(series, SplitSpec(), min_length=getattr(config, "lag", 1) + 1)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        res = run_experiment(config, splits)
    fc = res["forecaster"]
    report = {
        "schema_version": SCHEMA_VERSION,
        "manifest": _manifest(
            "train",
            {"model": args.model, "data": args.data, "config": args.config, "seed": seed, "epochs": args.epochs},
            data_path,
            series,
            seed,
            config=config,
        ),
        "splits": {"sizes": splits.sizes},
        "metrics": _metrics_block(res),
        "baseline": {"persistence": _baseline_block(res)},
        "runtime_seconds": res["runtime_seconds"],
        "test_predictions": [float(v) for v in res["test_predictions"]],
        "warnings": sorted({str(w.message) for w in caught}),
    }
    if fc.trace is not None:
        report["loss_curves"] = fc.trace.to_dict()
    if isinstance(fc.model, ArimaModel):
        report["residual_diagnostics"] = _residual_diagnostics(fc.model)
    if args.out_model:
        serialize.save(fc, args.out_model)
        report["model_file"] = str(args.out_model)
    report["manifest"]["started_at"] = started
    report["manifest"]["finished_at"] = _now()
    _write_json(report, args.report)
    return 0


def _resolve_grid(family: str, grid_arg: str):
    if grid_arg == "paper":
        return paper_grid(family)
    if grid_arg == "paper-4x4x4":
        return paper_grid(family, "4x4x4")
    path = Path(grid_arg)
    if not path.is_file():
        raise UsageError(f"grid must be 'paper', 'paper-4x4x4' or a JSON file; {grid_arg!r} not found")
    grid = load_grid(path)
    if grid.family != family:
        raise UsageError(f"grid file is for {grid.family!r}, not {family!r}")
    return grid


def cmd_gridsearch(args) -> int:
    started = _now()
    data_path, series = _load_series(args.data)
    seed = args.seed if args.seed is not None else _default_seed()
    grid = _resolve_grid(args.model, args.grid)
    overrides = {}
    if args.epochs is not None:
        if args.model == "arima":
            raise UsageError("--epochs does not apply to arima")
        overrides["epochs"] = args.epochs
    if args.workers < 1:
        raise UsageError("--workers must be >= 1")
    max_lag = max(getattr(c, "lag", 1) for c in enumerate_grid(grid, overrides))
    splits = split(series, SplitSpec(), min_length=max_lag + 1)
    t0 = time.perf_counter()
    result = run_grid(grid, splits, seed=seed, workers=args.workers, overrides=overrides)
    total = time.perf_counter() - t0
    best = result.best_run
    exp = result.best_experiment
    grid_doc = grid.to_dict()
    grid_doc["n_configs"] = len(result.runs)
    if grid.family == "arima" and args.grid == "paper":
        grid_doc["reported_count"] = 64
    report = {
        "schema_version": SCHEMA_VERSION,
        "manifest": _manifest(
            "gridsearch",
            {"model": args.model, "grid": args.grid, "data": args.data, "seed": seed, "epochs": args.epochs},
            data_path,
            series,
            seed,
            grid=grid,
        ),
        "splits": {"sizes": splits.sizes},
        "metrics": _metrics_block(exp),
        "baseline": {"persistence": _baseline_block(exp)},
        "runtime_seconds": total,
        "grid": {
            **grid_doc,
            "runs": [r.to_dict() for r in result.runs],
            "aggregates": result.aggregates(),
            "best": {
                "index": best.index,
                "config": config_to_dict(best.config),
                "config_digest": config_digest(best.config),
                "val": {"rmse": exp["metrics"]["val"].rmse, "mae": exp["metrics"]["val"].mae},
                "test": {
                    "rmse": exp["metrics"]["test"].rmse,
                    "mae": exp["metrics"]["test"].mae,
                    "runtime_seconds": exp["runtime_seconds"],
                },
            },
            "status_counts": _status_counts(result.runs),
        },
    }
    fc = exp["forecaster"]
    if fc.trace is not None:
        report["loss_curves"] = fc.trace.to_dict()
    report["manifest"]["started_at"] = started
    report["manifest"]["finished_at"] = _now()
    _write_json(report, args.report)
    return 0


def _status_counts(runs) -> dict:
    counts: dict = {}
    for r in runs:
        counts[r.status] = counts.get(r.status, 0) + 1
    return dict(sorted(counts.items()))


def cmd_forecast(args) -> int:
    model_path = Path(args.model_file)
    if not model_path.is_file():
        raise UsageError(f"model file not found: {model_path}")
    fc = serialize.load(model_path)
    data_path, series = _load_series(args.data)
    if args.steps < 1:
        raise UsageError("--steps must be >= 1")
    if len(series) < fc.lag:
        raise UsageError(f"model needs at least {fc.lag} trailing observations, data has {len(series)}")
    preds = fc.forecast(series.values, args.steps)
    first_week = series.start_index + len(series)
    doc = {
        "schema_version": SCHEMA_VERSION,
        "model_file": str(model_path),
        "family": fc.family,
        "config_digest": config_digest(fc.config),
        "data": {"path": str(data_path), "length": len(series)},
        "steps": args.steps,
        "forecast": [{"week": first_week + i, "height": float(v)} for i, v in enumerate(preds)],
    }
    _write_json(doc, args.report)
    return 0


def cmd_losscurves(args) -> int:
    path = Path(args.report)
    if not path.is_file():
        raise UsageError(f"report not found: {path}")
    doc = json.loads(path.read_text(encoding="utf-8"))
    curves = doc.get("loss_curves")
    if not curves:
        raise UsageError("report carries no loss curves (ARIMA reports have none)")
    rows = zip(curves["train_loss"], curves["val_loss"])
    out = sys.stdout if args.out in (None, "-") else open(args.out, "w", encoding="utf-8", newline="")
    try:
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["epoch", "train_loss", "val_loss"])
        for epoch, (tr, va) in enumerate(rows, start=1):
            writer.writerow([epoch, repr(float(tr)), repr(float(va))])
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


# ------------------------------------------------------------------ parser


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(2, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="grassforecast", description="Weekly grass-height forecasting toolkit")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", help="write a seeded synthetic series as CSV")
    g.add_argument("--length", type=int, default=1757)
    g.add_argument("--period", type=float, default=52.0)
    g.add_argument("--amplitude", type=float, default=40.0)
    g.add_argument("--trend", type=float, default=0.01)
    g.add_argument("--noise", type=float, default=5.0)
    g.add_argument("--level", type=float, default=50.0)
    g.add_argument("--seed", type=int, default=None)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_generate)

    families = ["arima", "lstm", "gru", "mlp", "tcn"]
    t = sub.add_parser("train", help="fit one configuration and report val/test metrics")
    t.add_argument("--model", choices=families, required=True)
    t.add_argument("--data", required=True)
    t.add_argument("--config", default=None, help="JSON object, relaxed {k:v} text, or a path")
    t.add_argument("--seed", type=int, default=None)
    t.add_argument("--epochs", type=int, default=None, help="override the configured epoch count")
    t.add_argument("--out-model", default=None)
    t.add_argument("--report", default=None, help="report path (stdout when omitted)")
    t.set_defaults(func=cmd_train)

    s = sub.add_parser("gridsearch", help="run a hyperparameter grid and report the winner")
    s.add_argument("--model", choices=families, required=True)
    s.add_argument("--grid", default="paper", help="'paper', 'paper-4x4x4' (arima) or a JSON grid file")
    s.add_argument("--data", required=True)
    s.add_argument("--seed", type=int, default=None)
    s.add_argument("--epochs", type=int, default=None, help="override every configuration's epochs")
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--report", default=None)
    s.set_defaults(func=cmd_gridsearch)

    f = sub.add_parser("forecast", help="recursive multi-step forecast from a saved model")
    f.add_argument("--model-file", required=True)
    f.add_argument("--data", required=True)
    f.add_argument("--steps", type=int, default=1)
    f.add_argument("--report", default=None)
    f.set_defaults(func=cmd_forecast)

    c = sub.add_parser("losscurves", help="export per-epoch losses from a report as CSV")
    c.add_argument("--report", required=True)
    c.add_argument("--out", default=None)
    c.set_defaults(func=cmd_losscurves)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "generate" and args.seed is None:
            args.seed = _default_seed()
        return args.func(args)
    except NumericalFailure as exc:
        print(f"grassforecast: numerical failure: {exc}", file=sys.stderr)
        return 3
    except (ForecastError, ValueError, OSError) as exc:
        print(f"grassforecast: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

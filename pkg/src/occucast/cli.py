"""Command-line entry point: ``occucast {ingest,synth,train,forecast,compare}``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
Every command writes a JSON manifest next to its outputs.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import re
import sys
import time
import warnings
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__, arima, lstm
from .errors import DataError, NumericalError, OccucastError
from .experiment import (LOG_TRANSFORM, LSTM_DIFF_ORDER, combined_problem, desk_grid, format_cost,
                         format_per_scope, format_reductions, format_report, load_table1, parse_grid,
                         resolve_preset, run_experiment_matrix, separate_problem, table1_cost_reports,
                         write_chart)
from .ingest import (SCALES, OccupancySeries, Scope, ap_ids, count_occupancy, infer_range, read_series,
                     read_sessions, write_series)
from .lstm import LstmConfig
from .preprocess import split_point
from .synth import BuildingProfile, benchmark_profile, default_profile, generate_sessions, write_dataset

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERICAL = 0, 1, 2, 3
FORECAST_HEADER = "interval_start,predicted_count"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# --------------------------------------------------------------------------
# manifests

def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(path, command: str, config: dict, seed: int | None, inputs, outputs) -> None:
    doc = {
        "command": command,
        "config": config,
        "seeds": {"seed": seed},
        "inputs": {str(p): sha256_file(p) for p in inputs},
        "outputs": {str(p): sha256_file(p) for p in outputs},
        "version": __version__,
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
    }
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def manifest_path(out: Path) -> Path:
    return out / "manifest.json" if out.is_dir() else out.with_name(out.name + ".manifest.json")


def _config(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k != "func"}


# --------------------------------------------------------------------------
# ingest

def cmd_ingest(args) -> int:
    sessions = read_sessions(args.log)
    scope = Scope.parse(args.scope)
    if not scope.is_building and scope.ap_id not in ap_ids(sessions):
        raise DataError(f"scope not present in log: {scope}")
    if args.start is not None and args.end is not None:
        t0, t1 = args.start, args.end
    elif sessions:
        t0, t1 = infer_range(sessions, args.scale)
        t0 = t0 if args.start is None else args.start
        t1 = t1 if args.end is None else args.end
    else:
        raise DataError("log is empty; give --start and --end to define the range")
    series = count_occupancy(sessions, args.scale, scope, t0, t1)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_series(series, out)
    write_manifest(manifest_path(out), "ingest", _config(args), None, [args.log], [out])
    return EXIT_OK


# --------------------------------------------------------------------------
# synth

def cmd_synth(args) -> int:
    if args.profile == "benchmark":
        profile = benchmark_profile(args.seed)
    else:
        if args.days < 1 or args.aps < 1:
            raise DataError("--days and --aps must be at least 1")
        profile = default_profile(seed=args.seed, days=args.days, ap_count=args.aps)
    if args.session_minutes is not None or args.noise is not None:
        profile = BuildingProfile(
            profile.ap_count, profile.days, profile.daily_shape, profile.weekend_scale,
            args.session_minutes if args.session_minutes is not None else profile.session_mean_minutes,
            args.noise if args.noise is not None else profile.noise, profile.seed)
    sessions, truth = generate_sessions(profile)
    out = Path(args.out)
    written = write_dataset(out, sessions, truth)
    write_manifest(out / "manifest.json", "synth", _config(args), args.seed, [], written)
    return EXIT_OK


# --------------------------------------------------------------------------
# train

def _load_histories(paths: list[str]) -> list[OccupancySeries]:
    return [read_series(p) for p in paths]


def _train_cut(series: OccupancySeries, test_fraction: float) -> int:
    """Epoch second where training data ends."""
    if test_fraction <= 0:
        return series.end
    return series.start + split_point(len(series), test_fraction) * series.step


def _lstm_config(args, heads: int) -> LstmConfig:
    if args.preset:
        try:
            cfg = resolve_preset(args.preset, seed=args.seed).config
        except DataError as exc:
            raise UsageError(str(exc)) from None
        if cfg.heads != heads:
            raise UsageError(f"preset {args.preset} expects {cfg.heads} series, got {heads}")
    else:
        if args.neurons is None or args.layers is None or args.lag is None:
            raise UsageError("lstm needs --preset or all of --neurons, --layers, --lag")
        cfg = LstmConfig(args.neurons, args.layers, args.lag, heads=heads, seed=args.seed)
    overrides = {k: getattr(args, k) for k in ("batch_size", "epochs") if getattr(args, k) is not None}
    return replace(cfg, **overrides)


def _full_problem(series: list[OccupancySeries], lag: int, cut: int):
    if len(series) == 1:
        return separate_problem(series[0], lag, cut)
    ordered = sorted(series, key=lambda s: s.scale_minutes)
    if [s.scale_minutes for s in ordered] != list(SCALES):
        raise DataError("combined model needs one 15, one 30 and one 60-minute series")
    return combined_problem(ordered, lag, cut)


def cmd_train(args) -> int:
    series = _load_histories(args.series)
    if args.model == "arima":
        if len(series) != 1:
            raise UsageError("arima trains on exactly one series")
        s = series[0]
        cut = (_train_cut(s, args.test_fraction) - s.start) // s.step
        y = s.values[:cut]
        transform = LOG_TRANSFORM if args.log_transform else None
        if args.order == "auto":
            spec, _ = arima.select_order(y, 2, 1, 2, transform=transform)
        else:
            spec = arima.ArimaSpec.parse(args.order)
        model = arima.fit_arima(y, spec, include_intercept=not args.no_intercept, transform=transform)
        text = arima.dumps(model)
    else:
        if len(series) not in (1, 3):
            raise UsageError("lstm trains on one series (separate) or three (combined)")
        cfg = _lstm_config(args, len(series))
        cut = _train_cut(min(series, key=lambda s: s.scale_minutes), args.test_fraction)
        cut -= cut % 3600 if len(series) == 3 else 0
        problem = _full_problem(series, cfg.lag, cut)
        if not problem.is_train.any():
            raise DataError("no training rows before the split")
        model = lstm.train(problem.frame(problem.is_train), cfg, problem.scalers, LSTM_DIFF_ORDER)
        text = lstm.dumps(model)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(text)
    write_manifest(manifest_path(out), "train", _config(args), args.seed, args.series, [out])
    return EXIT_OK


# --------------------------------------------------------------------------
# forecast

def load_model(path):
    text = Path(path).read_text()
    if text.startswith(arima.FORMAT_TAG):
        return arima.loads(text)
    try:
        return lstm.loads(text)
    except ValueError:
        raise DataError(f"{path}: unrecognised model file") from None


def cmd_forecast(args) -> int:
    if args.horizon < 0:
        raise UsageError("--horizon must be non-negative")
    model = load_model(args.model)
    series = _load_histories(args.series)
    combined = isinstance(model, lstm.LstmModel) and model.config.heads > 1
    if combined:
        series = sorted(series, key=lambda s: s.scale_minutes)
        if [s.scale_minutes for s in series] != list(SCALES):
            raise DataError("combined model needs 15, 30 and 60-minute histories")
        end = min(s.end for s in series)
        end -= end % 3600
        series = [s.slice_time(s.start, end) for s in series]
        pred = lstm.predict_series(model, [s.values for s in series], args.horizon)
        start, step = end, 3600
        header = "interval_start," + ",".join(f"predicted_count_{m}" for m in SCALES)
        rows = pred.T
    else:
        if len(series) != 1:
            raise UsageError("separate models forecast from exactly one series")
        s = series[0]
        if isinstance(model, lstm.LstmModel):
            pred = lstm.predict_series(model, s.values, args.horizon)
        else:
            pred = arima.forecast_arima(model, s.values, args.horizon)
        start, step = s.end, s.step
        header = FORECAST_HEADER
        rows = pred[:, None]
    lines = [header]
    for k, row in enumerate(rows):
        lines.append(f"{start + k * step}," + ",".join(f"{v:.6f}" for v in row))
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text("\n".join(lines) + "\n")
    write_manifest(manifest_path(out), "forecast", _config(args), None, [args.model, *args.series], [out])
    return EXIT_OK


# --------------------------------------------------------------------------
# compare

_SERIES_NAME = re.compile(r"^(building|ap-(.+))_(\d+)\.csv$")


def load_dataset(path) -> tuple[dict[str, dict[int, OccupancySeries]], list[Path]]:
    """Read ``<dir>/series/*.csv`` written by ``synth`` (or a flat directory of them)."""
    root = Path(path)
    folder = root / "series" if (root / "series").is_dir() else root
    files = sorted(folder.glob("*.csv"))
    dataset: dict[str, dict[int, OccupancySeries]] = {}
    used = []
    for f in files:
        m = _SERIES_NAME.match(f.name)
        if not m:
            continue
        scope = Scope.building() if m.group(1) == "building" else Scope.access_point(m.group(2))
        scale = int(m.group(3))
        dataset.setdefault(str(scope), {})[scale] = read_series(f, scale, scope)
        used.append(f)
    if not dataset:
        raise DataError(f"no series files found under {root}")
    return dataset, used


def cmd_compare(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    inputs = []
    if args.cost_only:
        reports = table1_cost_reports()
        path = out / "cost_report.txt"
        path.write_text(format_cost(reports, "table1 presets"))
        written.append(path)
    else:
        dataset, inputs = load_dataset(args.dataset)
        configs = grid = None
        if args.grid:
            grid = replace(parse_grid(Path(args.grid).read_text()), seed=args.seed)
            inputs.append(Path(args.grid))
        elif args.table1:
            configs = {name: p.config for name, p in load_table1(seed=args.seed).items()}
        else:
            grid = desk_grid(args.seed)
        if args.epochs is not None:
            if grid is not None:
                grid = replace(grid, epochs=(args.epochs,))
            else:
                configs = {k: replace(c, epochs=args.epochs) for k, c in configs.items()}
        log = (lambda msg: print(msg, file=sys.stderr, flush=True)) if args.verbose else None
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            report = run_experiment_matrix(dataset, configs, grid, args.test_fraction, seed=args.seed, log=log)
        for name, text in (("rmse_table.csv", format_report(report)),
                           ("rmse_per_scope.csv", format_per_scope(report)),
                           ("reductions.csv", format_reductions(report)),
                           ("cost_report.txt", format_cost(table1_cost_reports(), "table1 presets")
                            + format_cost(report.cost_report(), "Configurations used"))):
            (out / name).write_text(text)
            written.append(out / name)
        write_chart(report, out / "rmse_chart.svg")
        written.append(out / "rmse_chart.svg")
    write_manifest(out / "manifest.json", "compare", _config(args), args.seed, inputs, written)
    for p in written:
        print(p)
    return EXIT_OK


# --------------------------------------------------------------------------
# parser

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="occucast", description="Multi-scale occupancy forecasting from Wi-Fi logs.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("ingest", help="count occupancy from a session log")
    s.add_argument("log")
    s.add_argument("--scale", type=int, choices=SCALES, required=True)
    s.add_argument("--scope", default="building", help="building or ap:<id>")
    s.add_argument("--start", type=int, help="range start (epoch seconds, scale-aligned)")
    s.add_argument("--end", type=int, help="range end (epoch seconds, exclusive)")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_ingest)

    s = sub.add_parser("synth", help="generate a synthetic session log and ground truth")
    s.add_argument("--profile", choices=("default", "benchmark"), default="default",
                   help="benchmark: the 4-AP, 28-day acceptance preset (ignores --aps/--days)")
    s.add_argument("--aps", type=int, default=18)
    s.add_argument("--days", type=int, default=42)
    s.add_argument("--session-minutes", type=float)
    s.add_argument("--noise", type=float)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("train", help="fit an ARIMA or LSTM model")
    s.add_argument("model", choices=("arima", "lstm"))
    s.add_argument("series", nargs="+", help="one series, or 15/30/60-minute series for a combined LSTM")
    s.add_argument("--order", default="auto", help="p,d,q or auto (ARIMA)")
    s.add_argument("--log-transform", action="store_true", help="fit ARIMA on log10(count + 1)")
    s.add_argument("--no-intercept", action="store_true")
    s.add_argument("--preset", help="table1:<name>")
    s.add_argument("--neurons", type=int)
    s.add_argument("--layers", type=int)
    s.add_argument("--lag", type=int)
    s.add_argument("--batch-size", type=int)
    s.add_argument("--epochs", type=int)
    s.add_argument("--test-fraction", type=float, default=0.0, help="hold out this trailing fraction")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("forecast", help="iterate a trained model past its history")
    s.add_argument("model")
    s.add_argument("series", nargs="+")
    s.add_argument("--horizon", type=int, required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_forecast)

    s = sub.add_parser("compare", help="run the model comparison matrix")
    s.add_argument("dataset", nargs="?", help="directory written by synth")
    src = s.add_mutually_exclusive_group()
    src.add_argument("--grid", help="grid file (key = v1, v2 lines)")
    src.add_argument("--preset", dest="table1", choices=("table1",),
                     help="use the bundled table1 configurations instead of a grid search")
    s.add_argument("--epochs", type=int, help="override the epoch count")
    s.add_argument("--cost-only", action="store_true", help="write the cost report alone")
    s.add_argument("--test-fraction", type=float, default=0.2)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--verbose", action="store_true")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_compare)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "compare" and not args.cost_only and not args.dataset:
        parser.error("compare needs a dataset directory unless --cost-only is given")
    try:
        with np.errstate(over="ignore"):
            return args.func(args)
    except UsageError as exc:
        print(f"occucast: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as exc:
        print(f"occucast: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (DataError, OSError) as exc:
        print(f"occucast: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OccucastError as exc:
        print(f"occucast: error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())

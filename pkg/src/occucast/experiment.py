"""Neuron-count cost model, RMSE, grid search and the model-comparison matrix."""

from __future__ import annotations

import csv
import io
import itertools
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from decimal import ROUND_HALF_UP, Decimal, localcontext
from fractions import Fraction
from importlib import resources
from typing import Callable, Mapping, Sequence

import numpy as np

from .arima import ArimaSpec, fit_arima, one_step_predictions, select_order
from .errors import DataError, NumericalError, OccucastError
from .ingest import SCALES, OccupancySeries
from .lstm import LstmConfig, LstmModel, predict_rows, train
from .preprocess import (MultiScaleFrame, ScalerKind, ScalerParams, SupervisedFrame, apply_scaler,
                         difference, difference_series, fit_scaler, invert_scaler, split_point,
                         to_multiscale, to_supervised)

LOG_TRANSFORM = ScalerParams(ScalerKind.LOG_PLUS_ONE)
LSTM_DIFF_ORDER = 1
MODELS = ("ARIMA", "LSTM-separate", "LSTM-combined")
SCOPE_KINDS = ("building", "ap")


# --------------------------------------------------------------------------
# cost model

@dataclass(frozen=True)
class CostInputs:
    neurons: int
    layers: int
    lag: int
    heads: int = 1

    def __post_init__(self):
        if min(self.neurons, self.layers, self.lag, self.heads) < 1:
            raise DataError("cost inputs must be positive integers")

    @classmethod
    def from_config(cls, config: LstmConfig) -> CostInputs:
        return cls(config.neurons, config.layers, config.lag, config.heads)


def neurons_separate(neurons: int, layers: int, lag: int) -> int:
    """Hidden units of a single-output model plus its lag inputs and one output."""
    if min(neurons, layers, lag) < 1:
        raise DataError("neurons, layers and lag must be >= 1")
    return neurons * layers + lag + 1


def neurons_combined(neurons: int, layers: int, lag: int, heads: int) -> int:
    """Shared hidden units plus ``heads`` input blocks of ``lag`` and ``heads`` outputs."""
    if min(neurons, layers, lag, heads) < 1:
        raise DataError("neurons, layers, lag and heads must be >= 1")
    return neurons * layers + heads * lag + heads


def round_percent(value: Fraction) -> float:
    """Round to 2 decimals, ties away from zero."""
    with localcontext() as ctx:
        ctx.prec = 50
        d = Decimal(value.numerator) / Decimal(value.denominator)
        return float(d.quantize(Decimal("0.01"), rounding=ROUND_HALF_UP))


@dataclass(frozen=True)
class CostReport:
    separate: tuple[int, ...]
    separate_total: int
    combined: int
    reduction_percent: float

    def format(self, label: str = "") -> str:
        terms = " + ".join(str(v) for v in self.separate)
        head = f"{label}: " if label else ""
        return (f"{head}separate {terms} = {self.separate_total} neurons; combined {self.combined} "
                f"neurons; reduction {self.reduction_percent:.2f}%")


def cost_report(separate_configs: Sequence[CostInputs], combined_config: CostInputs) -> CostReport:
    if not separate_configs:
        raise DataError("need at least one separate model")
    separate = tuple(neurons_separate(c.neurons, c.layers, c.lag) for c in separate_configs)
    total = sum(separate)
    combined = neurons_combined(combined_config.neurons, combined_config.layers,
                                combined_config.lag, combined_config.heads)
    return CostReport(separate, total, combined, round_percent(Fraction(100 * (total - combined), total)))


# --------------------------------------------------------------------------
# table1 presets

@dataclass(frozen=True)
class Preset:
    name: str
    scope_kind: str      # "building" or "ap"
    scale: int | None    # None for a combined model
    config: LstmConfig


def _preset_meta(name: str) -> tuple[str, int | None]:
    kind = "building" if name.endswith("Building") else "ap"
    if name.startswith("Comb"):
        return kind, None
    return kind, int(name[3:5])


def load_table1(source=None, seed: int = 0) -> dict[str, Preset]:
    """Read the table1 reference configurations (bundled fixture by default)."""
    if source is None:
        text = resources.files("occucast").joinpath("data/table1.csv").read_text()
    else:
        text = open(source).read()
    presets = {}
    for row in csv.DictReader(io.StringIO(text)):
        kind, scale = _preset_meta(row["name"])
        cfg = LstmConfig(int(row["neurons"]), int(row["layers"]), int(row["lags"]),
                         int(row["batch_size"]), int(row["epochs"]), heads=1 if scale else 3, seed=seed)
        presets[row["name"]] = Preset(row["name"], kind, scale, cfg)
    return presets


def preset_name(scope_kind: str, scale: int | None) -> str:
    suffix = "Building" if scope_kind == "building" else "AP"
    return f"Comb{suffix}" if scale is None else f"Sep{scale}{suffix}"


def resolve_preset(text: str, seed: int = 0) -> Preset:
    """Resolve ``table1:<name>``."""
    presets = load_table1(seed=seed)
    family, _, name = text.partition(":")
    if family != "table1" or name not in presets:
        raise DataError(f"unknown preset {text!r}; valid: "
                        + ", ".join(f"table1:{n}" for n in presets))
    return presets[name]


def table1_cost_reports(presets: Mapping[str, Preset] | None = None) -> dict[str, CostReport]:
    presets = load_table1() if presets is None else presets
    reports = {}
    for kind in SCOPE_KINDS:
        separate = [CostInputs.from_config(presets[preset_name(kind, s)].config) for s in (60, 30, 15)]
        combined = CostInputs.from_config(presets[preset_name(kind, None)].config)
        reports[kind] = cost_report(separate, combined)
    return reports


# --------------------------------------------------------------------------
# metrics and grid search

def rmse(predicted, actual) -> float:
    p = np.asarray(predicted, dtype=float)
    a = np.asarray(actual, dtype=float)
    if p.shape != a.shape or p.size == 0:
        raise DataError(f"rmse needs equal non-empty inputs, got {p.shape} and {a.shape}")
    return float(np.sqrt(np.mean((p - a) ** 2)))


@dataclass(frozen=True)
class GridSpec:
    neurons: tuple[int, ...]
    layers: tuple[int, ...]
    lags: tuple[int, ...]
    batch_sizes: tuple[int, ...] = (16,)
    epochs: tuple[int, ...] = (100,)
    seed: int = 0

    def __post_init__(self):
        for name in ("neurons", "layers", "lags", "batch_sizes", "epochs"):
            if not getattr(self, name):
                raise DataError(f"grid list {name!r} is empty")

    def configs(self, heads: int = 1) -> list[LstmConfig]:
        """Cartesian product in enumeration order (neurons outermost)."""
        return [LstmConfig(n, h, lag, b, e, heads=heads, seed=self.seed)
                for n, h, lag, b, e in itertools.product(self.neurons, self.layers, self.lags,
                                                         self.batch_sizes, self.epochs)]

    def __len__(self) -> int:
        return (len(self.neurons) * len(self.layers) * len(self.lags)
                * len(self.batch_sizes) * len(self.epochs))


_GRID_KEYS = {"neurons": "neurons", "layers": "layers", "lags": "lags", "lag": "lags",
              "batch_size": "batch_sizes", "batch_sizes": "batch_sizes", "epochs": "epochs"}


def parse_grid(text: str) -> GridSpec:
    """Flat ``key = v1, v2, ...`` lines; ``#`` starts a comment."""
    fields, seed = {}, 0
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip().lower()
        if not sep:
            raise DataError(f"grid line {lineno}: expected 'key = values'")
        try:
            values = tuple(int(v) for v in value.split(",") if v.strip())
        except ValueError:
            raise DataError(f"grid line {lineno}: values must be integers") from None
        if key == "seed":
            seed = values[0]
        elif key in _GRID_KEYS:
            fields[_GRID_KEYS[key]] = values
        else:
            raise DataError(f"grid line {lineno}: unknown key {key!r}")
    missing = {"neurons", "layers", "lags"} - fields.keys()
    if missing:
        raise DataError(f"grid file missing {', '.join(sorted(missing))}")
    return GridSpec(**fields, seed=seed)


def desk_grid(seed: int = 0) -> GridSpec:
    text = resources.files("occucast").joinpath("data/desk_grid.txt").read_text()
    return replace(parse_grid(text), seed=seed)


@dataclass
class GridResult:
    config: LstmConfig
    rmse: float
    neurons: int
    error: str | None = None


def worker_count() -> int:
    try:
        return max(1, int(os.environ.get("OCCU_THREADS", "1")))
    except ValueError:
        return 1


def grid_search(grid: GridSpec, train_data, validation_data,
                trainer: Callable[[LstmConfig, object, object], float], heads: int = 1,
                workers: int | None = None) -> tuple[LstmConfig, list[GridResult]]:
    """Evaluate every grid configuration and pick the lowest validation RMSE.

    ``trainer(config, train_data, validation_data)`` builds a model and
    returns its validation RMSE.  Ties go to the cheaper model by neuron
    count, then to the earlier grid position.  Configurations whose trainer
    raises are kept in the table with their error message.
    """
    configs = grid.configs(heads)

    def run(config):
        neurons = config.neuron_count
        try:
            value = float(trainer(config, train_data, validation_data))
        except (OccucastError, FloatingPointError) as exc:
            return GridResult(config, float("nan"), neurons, str(exc))
        if not np.isfinite(value):
            return GridResult(config, float("nan"), neurons, "non-finite validation RMSE")
        return GridResult(config, value, neurons)

    workers = worker_count() if workers is None else workers
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(run, configs))  # map preserves grid order
    else:
        results = [run(c) for c in configs]
    ok = [(r.rmse, r.neurons, k) for k, r in enumerate(results) if r.error is None]
    if not ok:
        raise NumericalError("every grid configuration failed to train")
    return results[min(ok)[2]].config, results


# --------------------------------------------------------------------------
# series-level pipelines

@dataclass(eq=False)
class LstmProblem:
    """Scaled rows for one model plus what is needed to score them in counts.

    ``target_index[r, k]`` indexes ``counts[k]`` at row ``r``'s target.
    """

    inputs: np.ndarray
    targets: np.ndarray
    target_index: np.ndarray
    counts: list[np.ndarray]
    scalers: tuple[ScalerParams, ...]
    is_train: np.ndarray

    @property
    def heads(self) -> int:
        return self.targets.shape[1]

    def frame(self, rows: np.ndarray):
        if self.heads == 1:
            return SupervisedFrame(self.inputs.shape[1], self.inputs[rows], self.targets[rows, 0])
        return MultiScaleFrame(self.inputs.shape[1] // self.heads, self.inputs[rows],
                               self.targets[rows], np.zeros(int(np.sum(rows)), dtype=np.int64))


def separate_problem(series: OccupancySeries, lag: int, cut_time: int,
                     d: int = LSTM_DIFF_ORDER) -> LstmProblem:
    counts = series.values
    cut = (cut_time - series.start) // series.step
    diffs, _ = difference(counts, d)
    frame = to_supervised(diffs, lag)
    idx = np.arange(lag, len(diffs)) + d
    scaler = fit_scaler(diffs[: cut - d], ScalerKind.MINMAX_SYMMETRIC)
    return LstmProblem(apply_scaler(frame.inputs, scaler), apply_scaler(frame.targets, scaler)[:, None],
                       idx[:, None], [counts], (scaler,), idx < cut)


def combined_problem(series: Sequence[OccupancySeries], lag: int, cut_time: int,
                     d: int = LSTM_DIFF_ORDER) -> LstmProblem:
    diffs = [difference_series(s, d) for s in series]
    frame = to_multiscale(*diffs, lag)
    scalers, blocks, targets, idx = [], [], [], []
    for k, s in enumerate(series):
        cut = (cut_time - s.start) // s.step
        scaler = fit_scaler(s.values[:cut] if d == 0 else np.diff(s.values[:cut], d),
                            ScalerKind.MINMAX_SYMMETRIC)
        scalers.append(scaler)
        blocks.append(apply_scaler(frame.inputs[:, k * lag:(k + 1) * lag], scaler))
        targets.append(apply_scaler(frame.targets[:, k], scaler))
        idx.append((frame.anchors - s.start) // s.step)
    return LstmProblem(np.hstack(blocks), np.column_stack(targets), np.column_stack(idx),
                       [s.values for s in series], tuple(scalers), frame.anchors < cut_time)


def level_predictions(problem: LstmProblem, model: LstmModel, rows: np.ndarray) -> np.ndarray:
    """One-step predictions in counts, clamped at zero, shape (rows, m)."""
    raw = predict_rows(model, problem.inputs[rows])
    out = np.empty_like(raw)
    for k, scaler in enumerate(problem.scalers):
        # level error equals differenced error, so shift the observed level
        err = invert_scaler(raw[:, k], scaler) - invert_scaler(problem.targets[rows, k], scaler)
        out[:, k] = problem.counts[k][problem.target_index[rows, k]] + err
    return np.maximum(out, 0.0)


def level_actuals(problem: LstmProblem, rows: np.ndarray) -> np.ndarray:
    return np.column_stack([problem.counts[k][problem.target_index[rows, k]]
                            for k in range(problem.heads)])


def problem_rmse(problem: LstmProblem, model: LstmModel, rows: np.ndarray) -> np.ndarray:
    pred = level_predictions(problem, model, rows)
    act = level_actuals(problem, rows)
    return np.sqrt(np.mean((pred - act) ** 2, axis=0))


def fit_problem(problem: LstmProblem, config: LstmConfig, rows: np.ndarray) -> LstmModel:
    return train(problem.frame(rows), config, problem.scalers, LSTM_DIFF_ORDER)


def validation_rows(problem: LstmProblem, fraction: float) -> tuple[np.ndarray, np.ndarray]:
    """Split the training rows chronologically into fit and validation masks."""
    train_idx = np.flatnonzero(problem.is_train)
    cut = split_point(len(train_idx), fraction)
    fit_mask = np.zeros(len(problem.is_train), bool)
    val_mask = np.zeros(len(problem.is_train), bool)
    fit_mask[train_idx[:cut]] = True
    val_mask[train_idx[cut:]] = True
    return fit_mask, val_mask


@dataclass
class FitOutcome:
    model: object
    test_rmse: np.ndarray        # per head / scale
    test_predictions: np.ndarray
    test_actuals: np.ndarray
    description: str
    neurons: int | None = None


def _problem_for(series, lag: int, cut_time: int) -> LstmProblem:
    if isinstance(series, OccupancySeries):
        return separate_problem(series, lag, cut_time)
    return combined_problem(series, lag, cut_time)


def tune_lstm(series, cut_time: int, grid: GridSpec, validation_fraction: float = 0.2,
              workers: int | None = None) -> tuple[LstmConfig, list[GridResult]]:
    """Grid-search an LSTM on the training side of ``series``.

    ``series`` is one OccupancySeries (separate model) or the
    (15, 30, 60)-minute triple (combined model).  The objective is the mean
    per-scale validation RMSE in counts.
    """
    heads = 1 if isinstance(series, OccupancySeries) else 3
    problems = {}

    def trainer(config, _train, _val):
        if config.lag not in problems:
            problems[config.lag] = _problem_for(series, config.lag, cut_time)
        problem = problems[config.lag]
        fit_mask, val_mask = validation_rows(problem, validation_fraction)
        model = fit_problem(problem, config, fit_mask)
        return float(np.mean(problem_rmse(problem, model, val_mask)))

    for lag in grid.lags:  # build frames up front so worker threads only read them
        problems[lag] = _problem_for(series, lag, cut_time)
    return grid_search(grid, None, None, trainer, heads=heads, workers=workers)


def evaluate_lstm(series, cut_time: int, config: LstmConfig) -> FitOutcome:
    """Train on every row whose target precedes ``cut_time``; score the rest."""
    problem = _problem_for(series, config.lag, cut_time)
    model = fit_problem(problem, config, problem.is_train)
    test = ~problem.is_train
    if not test.any():
        raise DataError("no test rows after the split")
    pred = level_predictions(problem, model, test)
    act = level_actuals(problem, test)
    desc = f"N={config.neurons} H={config.layers} I={config.lag} batch={config.batch_size} epochs={config.epochs}"
    return FitOutcome(model, np.sqrt(np.mean((pred - act) ** 2, axis=0)), pred, act, desc,
                      config.neuron_count)


def evaluate_arima(series: OccupancySeries, cut_time: int, orders: tuple[int, int, int] = (2, 1, 2),
                   validation_fraction: float = 0.2, spec: ArimaSpec | None = None) -> FitOutcome:
    """Order selection and fitting on log counts; one-step test RMSE in counts."""
    counts = series.values
    cut = (cut_time - series.start) // series.step
    if spec is None:
        spec, _ = select_order(counts[:cut], *orders, validation=validation_fraction,
                               transform=LOG_TRANSFORM)
    model = fit_arima(counts[:cut], spec, transform=LOG_TRANSFORM)
    pred = np.maximum(one_step_predictions(model, counts)[cut:], 0.0)
    act = counts[cut:]
    return FitOutcome(model, np.array([rmse(pred, act)]), pred[:, None], act[:, None],
                      f"ARIMA{spec} log10(x+1)")


# --------------------------------------------------------------------------
# experiment matrix

Dataset = Mapping[str, Mapping[int, OccupancySeries]]


def check_dataset(dataset: Dataset) -> None:
    if "building" not in dataset:
        raise DataError("dataset has no building-level series")
    for scope, by_scale in dataset.items():
        for scale in SCALES:
            if scale not in by_scale:
                raise DataError(f"dataset is missing the {scale}-minute series for {scope}")


@dataclass
class Cell:
    scope_kind: str
    scale: int
    model: str
    rmse: float
    per_scope: dict[str, float]
    config: str
    neurons: int | None


@dataclass
class EvalReport:
    cells: list[Cell]
    configs: dict[str, LstmConfig]
    arima_orders: dict[tuple[str, int], str] = field(default_factory=dict)
    tuning: dict[str, list[GridResult]] = field(default_factory=dict)

    def cell(self, scope_kind: str, scale: int, model: str) -> Cell:
        for c in self.cells:
            if (c.scope_kind, c.scale, c.model) == (scope_kind, scale, model):
                return c
        raise KeyError((scope_kind, scale, model))

    def reductions(self) -> list[tuple[str, float]]:
        """Percent RMSE reduction of each candidate against its baseline."""
        out = []
        pairs = [("LSTM-combined", "LSTM-separate"), ("LSTM-combined", "ARIMA"), ("LSTM-separate", "ARIMA")]
        for kind in SCOPE_KINDS:
            for scale in SCALES:
                for cand, base in pairs:
                    b = self.cell(kind, scale, base).rmse
                    c = self.cell(kind, scale, cand).rmse
                    out.append((f"{cand} vs {base} {kind} {scale}min",
                                round_percent(Fraction(100 * (b - c)) / Fraction(b)) if b > 0 else float("nan")))
        for scale in SCALES:
            for model in MODELS:
                b = self.cell("building", scale, model).rmse
                a = self.cell("ap", scale, model).rmse
                out.append((f"ap vs building {model} {scale}min",
                            round_percent(Fraction(100 * (b - a)) / Fraction(b)) if b > 0 else float("nan")))
        return out

    def cost_report(self) -> dict[str, CostReport]:
        reports = {}
        for kind in SCOPE_KINDS:
            separate = [CostInputs.from_config(self.configs[preset_name(kind, s)]) for s in (60, 30, 15)]
            reports[kind] = cost_report(separate, CostInputs.from_config(self.configs[preset_name(kind, None)]))
        return reports


def run_experiment_matrix(dataset: Dataset, configs: Mapping[str, LstmConfig] | None = None,
                          grid: GridSpec | None = None, test_fraction: float = 0.2,
                          validation_fraction: float = 0.2, arima_orders: tuple[int, int, int] = (2, 1, 2),
                          seed: int = 0, workers: int | None = None, log: Callable[[str], None] | None = None
                          ) -> EvalReport:
    """Train and score ARIMA, separate LSTMs and the combined LSTM everywhere.

    LSTM configurations come from ``configs`` (keyed by table1 preset names),
    otherwise from a grid search on the building-level series whose winners
    are reused for every AP, otherwise from the table1 presets.  AP-level cells report
    the unweighted mean RMSE over APs.
    """
    check_dataset(dataset)
    log = log or (lambda msg: None)
    building = dataset["building"]
    cut_time = building[60].start + split_point(len(building[60]), test_fraction) * 3600
    aps = sorted(k for k in dataset if k != "building")
    if not aps:
        raise DataError("dataset has no AP-level series")

    tuning = {}
    if configs is None and grid is not None:
        configs = {}
        for scale in (*SCALES, None):
            series = building[scale] if scale else tuple(building[s] for s in SCALES)
            log(f"grid search {len(grid)} configs for {preset_name('building', scale)}")
            best, results = tune_lstm(series, cut_time, grid, validation_fraction, workers)
            tuning[preset_name("building", scale)] = results
            for kind in SCOPE_KINDS:
                configs[preset_name(kind, scale)] = replace(best, seed=seed)
    elif configs is None:
        configs = {name: p.config for name, p in load_table1(seed=seed).items()}
    configs = dict(configs)

    per_scope = {}
    arima_desc = {}
    for scope in ["building", *aps]:
        kind = "building" if scope == "building" else "ap"
        by_scale = dataset[scope]
        log(f"evaluating {scope}")
        for scale in SCALES:
            out = evaluate_arima(by_scale[scale], cut_time, arima_orders, validation_fraction)
            per_scope[(scope, scale, "ARIMA")] = (out.test_rmse[0], out.description, None)
            arima_desc[(scope, scale)] = out.description
            cfg = configs[preset_name(kind, scale)]
            out = evaluate_lstm(by_scale[scale], cut_time, cfg)
            per_scope[(scope, scale, "LSTM-separate")] = (out.test_rmse[0], out.description, out.neurons)
        cfg = configs[preset_name(kind, None)]
        out = evaluate_lstm(tuple(by_scale[s] for s in SCALES), cut_time, cfg)
        for k, scale in enumerate(SCALES):
            per_scope[(scope, scale, "LSTM-combined")] = (out.test_rmse[k], out.description, out.neurons)

    cells = []
    for kind, scopes in (("building", ["building"]), ("ap", aps)):
        for scale in SCALES:
            for model in MODELS:
                vals = {s: float(per_scope[(s, scale, model)][0]) for s in scopes}
                first = per_scope[(scopes[0], scale, model)]
                desc = first[1] if model != "ARIMA" or len(scopes) == 1 else "per-AP order selection"
                cells.append(Cell(kind, scale, model, float(np.mean(list(vals.values()))), vals, desc, first[2]))
    return EvalReport(cells, configs, arima_desc, tuning)


def format_report(report: EvalReport) -> str:
    """Delimited results table, one row per scope / scale / model."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["scope", "scale_minutes", "model", "rmse", "config", "neurons"])
    for c in report.cells:
        w.writerow([c.scope_kind, c.scale, c.model, f"{c.rmse:.6f}", c.config,
                    "" if c.neurons is None else c.neurons])
    return buf.getvalue()


def format_per_scope(report: EvalReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["scope", "scale_minutes", "model", "rmse"])
    for c in report.cells:
        for scope, value in c.per_scope.items():
            w.writerow([scope, c.scale, c.model, f"{value:.6f}"])
    return buf.getvalue()


def format_reductions(report: EvalReport) -> str:
    return "".join(f"{label},{value:.2f}\n" for label, value in report.reductions())


def format_cost(reports: Mapping[str, CostReport], title: str) -> str:
    lines = [title]
    lines += [reports[kind].format(kind) for kind in SCOPE_KINDS if kind in reports]
    return "\n".join(lines) + "\n"


def write_chart(report: EvalReport, path) -> None:
    """Grouped bar chart of test RMSE (SVG), one panel per scope kind."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "occucast"
    fig, axes = plt.subplots(1, 2, figsize=(10, 4))
    width = 0.25
    x = np.arange(len(SCALES))
    for ax, kind in zip(axes, SCOPE_KINDS):
        for k, model in enumerate(MODELS):
            vals = [report.cell(kind, s, model).rmse for s in SCALES]
            ax.bar(x + (k - 1) * width, vals, width, label=model)
        ax.set_xticks(x)
        ax.set_xticklabels([f"{s} min" for s in SCALES])
        ax.set_title("Building level" if kind == "building" else "AP level (mean over APs)")
        ax.set_ylabel("test RMSE (occupants)")
    axes[0].legend()
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)

"""Differencing, scaling and supervised framing of occupancy series.

The model pipelines apply these in the order difference -> frame -> scale,
with every scaler fit on training data only.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import DataError


@dataclass(frozen=True)
class DifferenceState:
    """Everything needed to undo ``d`` rounds of first-differencing.

    ``seeds[j]`` is the first value of the series after ``j`` rounds.
    """

    order: int
    seeds: tuple[float, ...]

    def __post_init__(self):
        if len(self.seeds) != self.order:
            raise DataError(f"difference state of order {self.order} has {len(self.seeds)} seeds")


def difference(series, d: int) -> tuple[np.ndarray, DifferenceState]:
    """Apply first-differencing ``d`` times."""
    x = np.asarray(series, dtype=float)
    if d < 0:
        raise DataError("differencing order must be non-negative")
    if len(x) <= d:
        raise DataError(f"series of length {len(x)} too short for d={d}")
    seeds = []
    for _ in range(d):
        seeds.append(float(x[0]))
        x = np.diff(x)
    return x, DifferenceState(d, tuple(seeds))


def invert_difference(diffed, state: DifferenceState, order: int | None = None) -> np.ndarray:
    """Exact inverse of :func:`difference`.

    ``order`` may be passed to assert the expected differencing order.
    """
    if order is not None and order != state.order:
        raise DataError(f"state has order {state.order}, expected {order}")
    x = np.asarray(diffed, dtype=float)
    for seed in reversed(state.seeds):
        x = seed + np.concatenate(([0.0], np.cumsum(x)))
    return x


def difference_tails(history, d: int) -> list[float]:
    """Last value of the history after 0..d-1 rounds of differencing."""
    x = np.asarray(history, dtype=float)
    if len(x) < d:
        raise DataError(f"need at least {d} observations to integrate a forecast")
    tails = []
    for _ in range(d):
        tails.append(float(x[-1]))
        x = np.diff(x)
    return tails


def integrate_forecast(diff_forecast, history, d: int) -> np.ndarray:
    """Undo ``d`` rounds of differencing on values that continue ``history``."""
    x = np.asarray(diff_forecast, dtype=float)
    for tail in reversed(difference_tails(history, d)):
        x = tail + np.cumsum(x)
    return x


class ScalerKind(enum.Enum):
    MINMAX_SYMMETRIC = "minmax"
    LOG_PLUS_ONE = "log10p1"


@dataclass(frozen=True)
class ScalerParams:
    kind: ScalerKind
    min: float = 0.0
    max: float = 0.0

    def __post_init__(self):
        if self.kind is ScalerKind.MINMAX_SYMMETRIC and not self.min < self.max:
            raise DataError(f"min-max scaler needs min < max, got [{self.min}, {self.max}]")


def fit_scaler(train, kind: ScalerKind) -> ScalerParams:
    x = np.asarray(train, dtype=float)
    if x.size == 0:
        raise DataError("cannot fit a scaler on empty data")
    if kind is ScalerKind.LOG_PLUS_ONE:
        if x.min() < 0:
            raise DataError("log scaling requires non-negative values")
        return ScalerParams(kind)
    lo, hi = float(x.min()), float(x.max())
    if lo == hi:
        raise DataError("cannot min-max scale a constant series")
    return ScalerParams(kind, lo, hi)


def apply_scaler(values, params: ScalerParams) -> np.ndarray:
    """Map to model space.  Min-max output is deliberately not clipped."""
    x = np.asarray(values, dtype=float)
    if params.kind is ScalerKind.LOG_PLUS_ONE:
        if x.size and x.min() < 0:
            raise DataError("log scaling requires non-negative values")
        return np.log10(x + 1.0)
    return 2.0 * (x - params.min) / (params.max - params.min) - 1.0


def invert_scaler(values, params: ScalerParams) -> np.ndarray:
    y = np.asarray(values, dtype=float)
    if params.kind is ScalerKind.LOG_PLUS_ONE:
        return np.power(10.0, y) - 1.0
    return (y + 1.0) / 2.0 * (params.max - params.min) + params.min


@dataclass(frozen=True, eq=False)
class SupervisedFrame:
    lag: int
    inputs: np.ndarray   # (rows, lag)
    targets: np.ndarray  # (rows,)

    def __len__(self) -> int:
        return len(self.targets)

    @property
    def heads(self) -> int:
        return 1

    def target_matrix(self) -> np.ndarray:
        return self.targets.reshape(-1, 1)


@dataclass(frozen=True, eq=False)
class MultiScaleFrame:
    """Rows anchored at 60-minute boundaries.

    Input columns are ``[15-min block | 30-min block | 60-min block]``, each
    block holding ``lag`` observations oldest first; targets are the
    intervals starting at the anchor, in the same scale order.
    """

    lag: int
    inputs: np.ndarray   # (rows, m * lag)
    targets: np.ndarray  # (rows, m)
    anchors: np.ndarray  # (rows,) epoch seconds

    def __len__(self) -> int:
        return len(self.targets)

    @property
    def heads(self) -> int:
        return self.targets.shape[1]

    def target_matrix(self) -> np.ndarray:
        return self.targets


def to_supervised(series, lag: int) -> SupervisedFrame:
    x = np.asarray(series, dtype=float)
    if lag < 1:
        raise DataError("lag must be positive")
    if len(x) <= lag:
        raise DataError(f"series of length {len(x)} too short for lag {lag}")
    windows = np.lib.stride_tricks.sliding_window_view(x, lag + 1)
    return SupervisedFrame(lag, windows[:, :lag].copy(), windows[:, lag].copy())


@dataclass(frozen=True, eq=False)
class RealSeries:
    """Real-valued series on a regular grid (e.g. a differenced count series).

    Value ``k`` belongs to the interval starting at ``start + k*scale``.
    """

    scale_minutes: int
    start: int
    values: np.ndarray

    @property
    def step(self) -> int:
        return self.scale_minutes * 60

    @property
    def end(self) -> int:
        return self.start + len(self.values) * self.step


def as_real(series) -> RealSeries:
    """Accept an OccupancySeries or RealSeries."""
    if isinstance(series, RealSeries):
        return series
    return RealSeries(series.scale_minutes, series.start, np.asarray(series.values, dtype=float))


def difference_series(series, d: int) -> RealSeries:
    """Difference a gridded series, keeping each value on its own interval."""
    s = as_real(series)
    diffed, _ = difference(s.values, d)
    return RealSeries(s.scale_minutes, s.start + d * s.step, diffed)


MULTISCALE_ORDER = (15, 30, 60)
ANCHOR_SECONDS = 3600


def to_multiscale(series15, series30, series60, lag: int) -> MultiScaleFrame:
    """Build a combined-model frame from three aligned series.

    A row exists for each hour boundary ``t`` at which every scale has
    ``lag`` observations ending at or before ``t`` and a target interval
    starting at ``t``.
    """
    if lag < 1:
        raise DataError("lag must be positive")
    parts = [as_real(s) for s in (series15, series30, series60)]
    for want, s in zip(MULTISCALE_ORDER, parts):
        if s.scale_minutes != want:
            raise DataError(f"expected a {want}-minute series, got {s.scale_minutes}")
        if s.start % s.step:
            raise DataError(f"{want}-minute series start is not on its grid")

    first = max(s.start + lag * s.step for s in parts)
    last = min(s.end - s.step for s in parts)
    first = -(-first // ANCHOR_SECONDS) * ANCHOR_SECONDS
    if first > last:
        raise DataError(f"insufficient history: no hour boundary has {lag} prior "
                        "observations and a target at every scale")
    anchors = np.arange(first, last + 1, ANCHOR_SECONDS, dtype=np.int64)

    blocks, targets = [], []
    for s in parts:
        idx = (anchors - s.start) // s.step  # index of the target interval
        windows = np.lib.stride_tricks.sliding_window_view(s.values, lag)
        blocks.append(windows[idx - lag])
        targets.append(s.values[idx])
    return MultiScaleFrame(lag, np.hstack(blocks), np.column_stack(targets), anchors)


def split_train_test(series, test_fraction: float = 0.2):
    """Chronological split; the test side is the final ceil(fraction*n) values."""
    cut = split_point(len(series), test_fraction)
    return series[:cut], series[cut:]


def split_point(n: int, test_fraction: float) -> int:
    """Index of the first test observation for a series of length ``n``."""
    if not 0.0 < test_fraction < 1.0:
        raise DataError("test_fraction must lie strictly between 0 and 1")
    # round first so 0.1 * 30 counts as 3, not 3.0000000000000004
    n_test = math.ceil(round(test_fraction * n, 9))
    if n_test >= n or n_test == 0:
        raise DataError(f"split of {n} observations at {test_fraction} leaves an empty side")
    return n - n_test


def format_frame(frame: SupervisedFrame | MultiScaleFrame) -> str:
    """Debug dump: one row per sample, inputs then targets."""
    targets = frame.target_matrix()
    return "".join(",".join(repr(float(v)) for v in (*row, *tgt)) + "\n"
                   for row, tgt in zip(frame.inputs, targets))

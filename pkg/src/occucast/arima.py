"""ARIMA(p, d, q) fitting by conditional sum of squares, and forecasting.

After ``d`` rounds of differencing the series ``w`` follows

    w_t = c + sum_i a_i w_{t-i} + z_t + sum_j b_j z_{t-j}

with white-noise ``z``.  Residuals are computed recursively with pre-sample
values and residuals set to zero, and the squared-residual sum is minimised
with a Nelder-Mead simplex started from a least-squares AR fit.
"""

from __future__ import annotations

import io
import itertools
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize
from scipy.signal import lfilter

from .errors import ConvergenceError, DataError, NumericalError, OccucastError
from .preprocess import (DifferenceState, ScalerKind, ScalerParams, apply_scaler, difference,
                         integrate_forecast, invert_scaler, split_point)

FORMAT_TAG = "arima_v1"


@dataclass(frozen=True)
class ArimaSpec:
    p: int
    d: int
    q: int

    def __post_init__(self):
        if min(self.p, self.d, self.q) < 0:
            raise DataError(f"ARIMA orders must be non-negative, got {self}")

    @classmethod
    def parse(cls, text: str) -> ArimaSpec:
        try:
            p, d, q = (int(v) for v in text.split(","))
        except ValueError:
            raise DataError(f"order must look like 'p,d,q', got {text!r}") from None
        return cls(p, d, q)

    def __str__(self) -> str:
        return f"({self.p},{self.d},{self.q})"


@dataclass(frozen=True, eq=False)
class ArimaModel:
    spec: ArimaSpec
    intercept: float
    ar: np.ndarray
    ma: np.ndarray
    residuals: np.ndarray = field(repr=False)
    diff_state: DifferenceState
    fit_loss: float
    include_intercept: bool = True
    transform: ScalerParams | None = None
    iterations: int = 0

    @property
    def sigma2(self) -> float:
        return float(np.mean(self.residuals ** 2)) if len(self.residuals) else 0.0

    @property
    def stationary(self) -> bool:
        return _roots_inside(np.r_[1.0, -self.ar])

    @property
    def invertible(self) -> bool:
        return _roots_inside(np.r_[1.0, self.ma])


def _roots_inside(poly: np.ndarray) -> bool:
    # roots of z^k + c_1 z^{k-1} + ... lie inside the unit circle iff the
    # lag polynomial 1 + c_1 L + ... has all roots outside it
    if len(poly) <= 1:
        return True
    return bool(np.all(np.abs(np.roots(poly)) < 1.0))


def css_residuals(w, intercept: float, ar, ma) -> np.ndarray:
    """Residuals of the ARMA recursion with zero pre-sample values."""
    w = np.asarray(w, dtype=float)
    ar = np.asarray(ar, dtype=float)
    ma = np.asarray(ma, dtype=float)
    e = lfilter(np.r_[1.0, -ar], [1.0], w) - intercept
    if len(ma):
        e = lfilter([1.0], np.r_[1.0, ma], e)
    return e


def simulate_arma(intercept: float, ar, ma, sigma: float, length: int,
                  seed: int | None = 0) -> np.ndarray:
    """Draw a sample path with Gaussian white noise.

    The recursion starts from zeros and the first ``10*max(p, q)`` values
    are discarded as burn-in.
    """
    ar = np.asarray(ar, dtype=float)
    ma = np.asarray(ma, dtype=float)
    if not _roots_inside(np.r_[1.0, -ar]):
        raise DataError(f"AR coefficients {ar.tolist()} are not stationary")
    if sigma < 0 or length < 0:
        raise DataError("sigma and length must be non-negative")
    burn = 10 * max(len(ar), len(ma))
    rng = np.random.default_rng(seed)
    z = rng.normal(0.0, 1.0, length + burn) * sigma
    den = np.r_[1.0, -ar]
    x = lfilter(np.r_[1.0, ma], den, z) + lfilter([1.0], den, np.full(length + burn, float(intercept)))
    return x[burn:]


def _lagged_design(w: np.ndarray, p: int, intercept: bool) -> np.ndarray:
    n = len(w)
    cols = [np.ones(n)] if intercept else []
    for i in range(1, p + 1):
        cols.append(np.r_[np.zeros(min(i, n)), w[: n - i]])
    return np.column_stack(cols) if cols else np.empty((n, 0))


def _start_params(w: np.ndarray, spec: ArimaSpec, intercept: bool) -> np.ndarray:
    """Least-squares AR start on the zero-padded lag matrix; MA terms zero."""
    X = _lagged_design(w, spec.p, intercept)
    beta = np.linalg.lstsq(X, w, rcond=None)[0] if X.shape[1] else np.empty(0)
    return np.r_[beta, np.zeros(spec.q)]


def _unpack(theta: np.ndarray, spec: ArimaSpec, intercept: bool):
    k = 1 if intercept else 0
    c = float(theta[0]) if intercept else 0.0
    return c, theta[k:k + spec.p], theta[k + spec.p:k + spec.p + spec.q]


def fit_arima(series, spec: ArimaSpec, include_intercept: bool = True,
              transform: ScalerParams | None = None, max_iter: int = 500,
              tol: float = 1e-8) -> ArimaModel:
    """Fit by conditional least squares.

    Parameters
    ----------
    series : array_like
        Observations in original units.
    spec : ArimaSpec
    include_intercept : bool
        Estimate the constant term; when False it is fixed at zero.
    transform : ScalerParams, optional
        Applied to the series before differencing (e.g. ``log10(x + 1)``)
        and inverted on every forecast.
    max_iter, tol
        Simplex iteration cap and convergence tolerance on the mean
        squared residual.

    Raises
    ------
    DataError
        If fewer than ``10 * (p + q + 1)`` values remain after differencing.
    ConvergenceError
        If the simplex hits ``max_iter`` first.
    """
    y = np.asarray(series, dtype=float)
    if transform is not None:
        y = apply_scaler(y, transform)
    if len(y) <= spec.d:
        raise DataError(f"series of length {len(y)} too short for d={spec.d}")
    w, state = difference(y, spec.d)
    need = 10 * (spec.p + spec.q + 1)
    if len(w) < need:
        raise DataError(f"{len(w)} observations after differencing; ARIMA{spec} needs {need}")

    def loss(theta):
        c, ar, ma = _unpack(theta, spec, include_intercept)
        z = css_residuals(w, c, ar, ma)
        val = float(np.mean(z * z))
        return val if np.isfinite(val) else np.inf

    theta0 = _start_params(w, spec, include_intercept)
    iterations = 0
    if theta0.size:
        simplex = np.vstack([theta0, theta0 + 0.1 * np.eye(theta0.size)])
        res = minimize(loss, theta0, method="Nelder-Mead",
                       options=dict(maxiter=max_iter, maxfev=50 * max_iter, xatol=np.inf,
                                    fatol=tol, initial_simplex=simplex))
        theta = res.x if res.fun <= loss(theta0) else theta0
        iterations = int(res.nit)
        if res.status != 0:
            raise ConvergenceError(f"ARIMA{spec} fit did not converge in {max_iter} iterations",
                                   float(res.fun) * len(w))
    else:
        theta = theta0

    c, ar, ma = _unpack(theta, spec, include_intercept)
    z = css_residuals(w, c, ar, ma)
    model = ArimaModel(spec, c, np.array(ar, dtype=float), np.array(ma, dtype=float), z, state,
                       float(np.sum(z * z)), include_intercept, transform, iterations)
    if not (model.stationary and model.invertible):
        warnings.warn(f"ARIMA{spec} fit is {'non-stationary' if not model.stationary else 'non-invertible'}",
                      RuntimeWarning, stacklevel=2)
    return model


def _transformed(model: ArimaModel, history) -> np.ndarray:
    y = np.asarray(history, dtype=float)
    return apply_scaler(y, model.transform) if model.transform is not None else y


def _untransformed(model: ArimaModel, values: np.ndarray) -> np.ndarray:
    return invert_scaler(values, model.transform) if model.transform is not None else values


def forecast_arima(model: ArimaModel, history, horizon: int) -> np.ndarray:
    """Iterate the model ``horizon`` steps past the end of ``history``.

    Residuals are recomputed over the history; future shocks are zero.
    """
    if horizon < 0:
        raise DataError("horizon must be non-negative")
    spec = model.spec
    y = _transformed(model, history)
    if len(y) < spec.d + max(spec.p, spec.q, 1):
        raise DataError(f"ARIMA{spec} forecast needs at least "
                        f"{spec.d + max(spec.p, spec.q, 1)} observations of history")
    if horizon == 0:
        return np.empty(0)
    w, _ = difference(y, spec.d)
    z = css_residuals(w, model.intercept, model.ar, model.ma)
    n = len(w)
    w_ext = np.r_[w, np.zeros(horizon)]
    z_ext = np.r_[z, np.zeros(horizon)]
    for t in range(n, n + horizon):
        acc = model.intercept
        for i, a in enumerate(model.ar, start=1):
            if t - i >= 0:
                acc += a * w_ext[t - i]
        for j, b in enumerate(model.ma, start=1):
            if t - j >= 0:
                acc += b * z_ext[t - j]
        w_ext[t] = acc
    out = integrate_forecast(w_ext[n:], y, spec.d)
    return _untransformed(model, out)


def one_step_predictions(model: ArimaModel, series) -> np.ndarray:
    """In-sample one-step-ahead predictions over ``series``.

    Entry ``t`` predicts ``series[t]`` from ``series[:t]``; the first ``d``
    entries are NaN.  Because differencing has unit leading coefficient the
    prediction in level units is the observation minus its residual.
    """
    y = _transformed(model, series)
    d = model.spec.d
    w, _ = difference(y, d)
    z = css_residuals(w, model.intercept, model.ar, model.ma)
    pred = np.full(len(y), np.nan)
    # y_t - w_t is a binomial combination of earlier levels; building the
    # prediction from those keeps a pure random walk exact
    n = len(y)
    base = np.zeros(n - d)
    for k in range(1, d + 1):
        base -= (-1) ** k * math.comb(d, k) * y[d - k:n - k]
    pred[d:] = base + (w - z)
    pred[d:] = _untransformed(model, pred[d:])
    return pred


def select_order(series, p_max: int, d_max: int, q_max: int, validation: float = 0.2,
                 include_intercept: bool = True, transform: ScalerParams | None = None,
                 max_iter: int = 500) -> tuple[ArimaSpec, list[tuple[ArimaSpec, float]]]:
    """Exhaustive (p, d, q) search by one-step validation RMSE.

    The final ``validation`` fraction of ``series`` is held out.  Ties go to
    the smaller p+d+q, then smaller d, then smaller p.  Returns the winner
    and every successful ``(spec, rmse)``.
    """
    if min(p_max, d_max, q_max) < 0:
        raise DataError("order bounds must be non-negative")
    y = np.asarray(series, dtype=float)
    cut = split_point(len(y), validation)
    results = []
    for p, d, q in itertools.product(range(p_max + 1), range(d_max + 1), range(q_max + 1)):
        spec = ArimaSpec(p, d, q)
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                model = fit_arima(y[:cut], spec, include_intercept, transform, max_iter)
                pred = one_step_predictions(model, y)[cut:]
        except OccucastError:
            continue
        err = float(np.sqrt(np.mean((pred - y[cut:]) ** 2)))
        if np.isfinite(err):
            results.append((spec, err))
    if not results:
        raise NumericalError("no ARIMA order in the grid could be fitted")
    best = min(results, key=lambda r: (r[1], r[0].p + r[0].d + r[0].q, r[0].d, r[0].p))
    return best[0], results


def _floats(values) -> str:
    return ",".join(repr(float(v)) for v in values)


def _parse_floats(text: str) -> np.ndarray:
    return np.array([float(v) for v in text.split(",") if v], dtype=float)


def dumps(model: ArimaModel) -> str:
    """Flat ``key=value`` text, first line ``arima_v1``."""
    s = model.spec
    lines = [
        FORMAT_TAG,
        f"p={s.p}", f"d={s.d}", f"q={s.q}",
        f"include_intercept={int(model.include_intercept)}",
        f"intercept={model.intercept!r}",
        f"ar={_floats(model.ar)}",
        f"ma={_floats(model.ma)}",
        f"diff_seeds={_floats(model.diff_state.seeds)}",
        f"transform={model.transform.kind.value if model.transform else 'none'}",
        f"sigma2={model.sigma2!r}",
        f"fit_loss={model.fit_loss!r}",
    ]
    return "\n".join(lines) + "\n"


def loads(text: str) -> ArimaModel:
    lines = [ln.strip() for ln in io.StringIO(text) if ln.strip()]
    if not lines or lines[0] != FORMAT_TAG:
        raise DataError(f"not an {FORMAT_TAG} model file")
    kv = {}
    for ln in lines[1:]:
        key, sep, value = ln.partition("=")
        if not sep:
            raise DataError(f"bad model line {ln!r}")
        kv[key] = value
    try:
        spec = ArimaSpec(int(kv["p"]), int(kv["d"]), int(kv["q"]))
        transform = None if kv["transform"] == "none" else ScalerParams(ScalerKind(kv["transform"]))
        return ArimaModel(spec, float(kv["intercept"]), _parse_floats(kv["ar"]),
                          _parse_floats(kv["ma"]), np.empty(0),
                          DifferenceState(spec.d, tuple(_parse_floats(kv["diff_seeds"]))),
                          float(kv["fit_loss"]), bool(int(kv["include_intercept"])), transform)
    except KeyError as exc:
        raise DataError(f"model file missing key {exc.args[0]}") from None

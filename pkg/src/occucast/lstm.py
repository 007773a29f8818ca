"""Stacked peephole LSTM with a linear head, trained by BPTT and Adam.

One cell step, with ``*`` the element-wise product::

    f = sigmoid(W_xf x + W_hf h_prev + w_cf * c_prev + b_f)
    i = sigmoid(W_xi x + W_hi h_prev + w_ci * c_prev + b_i)
    c = f * c_prev + i * tanh(W_xc x + W_hc h_prev + b_c)
    o = sigmoid(W_xo x + W_ho h_prev + w_co * c + b_o)
    h = o * tanh(c)

An input row of width ``m*I`` is read as ``I`` time steps of width ``m``:
step ``t`` carries the ``t``-th lag of every scale.  States start at zero
for every row.  The final top-layer ``h`` feeds an ``m``-output linear head.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from . import _kernels
from .errors import DataError, NumericalError
from .preprocess import (ScalerKind, ScalerParams, apply_scaler, difference, integrate_forecast,
                         invert_scaler)

FORMAT_TAG = "lstm_v1"
PEEPHOLES = ("p_f", "p_i", "p_o")


@dataclass(frozen=True)
class LstmConfig:
    neurons: int
    layers: int
    lag: int
    batch_size: int = 16
    epochs: int = 100
    heads: int = 1
    peepholes: bool = True
    seed: int = 0
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    forget_bias: float = 1.0

    def __post_init__(self):
        for name in ("neurons", "layers", "lag", "batch_size", "epochs"):
            if getattr(self, name) < 1:
                raise DataError(f"{name} must be a positive integer")
        if self.heads not in (1, 3):
            raise DataError("heads must be 1 (separate) or 3 (combined)")

    @property
    def input_width(self) -> int:
        return self.heads * self.lag

    @property
    def neuron_count(self) -> int:
        """Hidden units plus input and output neurons."""
        return self.neurons * self.layers + self.heads * self.lag + self.heads


@dataclass(eq=False)
class LstmLayerParams:
    """Gate blocks are stacked in the order f, i, c, o along axis 0."""

    W_x: np.ndarray  # (4N, inputs)
    W_h: np.ndarray  # (4N, N)
    b: np.ndarray    # (4N,)
    p_f: np.ndarray  # (N,)
    p_i: np.ndarray
    p_o: np.ndarray

    @property
    def units(self) -> int:
        return self.W_h.shape[1]

    @property
    def inputs(self) -> int:
        return self.W_x.shape[1]

    @classmethod
    def zeros(cls, inputs: int, units: int) -> LstmLayerParams:
        return cls(np.zeros((4 * units, inputs)), np.zeros((4 * units, units)),
                   np.zeros(4 * units), np.zeros(units), np.zeros(units), np.zeros(units))


@dataclass(eq=False)
class CellState:
    h: np.ndarray
    c: np.ndarray

    @classmethod
    def zeros(cls, units: int, batch: int | None = None) -> CellState:
        shape = (units,) if batch is None else (batch, units)
        return cls(np.zeros(shape), np.zeros(shape))


@dataclass(eq=False)
class LstmModel:
    config: LstmConfig
    layers: list[LstmLayerParams]
    W_y: np.ndarray  # (m, N)
    b_y: np.ndarray  # (m,)
    scalers: tuple[ScalerParams, ...] | None = None
    diff_order: int = 0
    loss_history: list[float] = field(default_factory=list, repr=False)

    def parameters(self) -> dict[str, np.ndarray]:
        """Trainable arrays by name (live references)."""
        params = {}
        for k, layer in enumerate(self.layers):
            params[f"layer{k}.W_x"] = layer.W_x
            params[f"layer{k}.W_h"] = layer.W_h
            params[f"layer{k}.b"] = layer.b
            if self.config.peepholes:
                for name in PEEPHOLES:
                    params[f"layer{k}.{name}"] = getattr(layer, name)
        params["head.W"] = self.W_y
        params["head.b"] = self.b_y
        return params

    @property
    def neuron_count(self) -> int:
        return self.config.neuron_count


def sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def cell_forward(params: LstmLayerParams, x_t, prev: CellState, peepholes: bool = True) -> CellState:
    """One time step for a single vector or a batch of row vectors."""
    x_t = np.asarray(x_t, dtype=float)
    n = params.units
    if x_t.shape[-1] != params.inputs or prev.h.shape[-1] != n or prev.c.shape[-1] != n:
        raise DataError(f"cell expects {params.inputs} inputs and {n} units; "
                        f"got x {x_t.shape}, h {prev.h.shape}, c {prev.c.shape}")
    a = x_t @ params.W_x.T + prev.h @ params.W_h.T + params.b
    a_f, a_i, a_c, a_o = a[..., :n], a[..., n:2 * n], a[..., 2 * n:3 * n], a[..., 3 * n:]
    if peepholes:
        a_f = a_f + params.p_f * prev.c
        a_i = a_i + params.p_i * prev.c
    c = sigmoid(a_f) * prev.c + sigmoid(a_i) * np.tanh(a_c)
    if peepholes:
        a_o = a_o + params.p_o * c
    return CellState(sigmoid(a_o) * np.tanh(c), c)


def init_model(config: LstmConfig, rng: np.random.Generator | None = None) -> LstmModel:
    """Uniform(-s, s) weights with s = 1/sqrt(fan-in); forget bias preset."""
    rng = np.random.default_rng(config.seed) if rng is None else rng
    n = config.neurons
    layers = []
    inputs = config.heads
    for _ in range(config.layers):
        s = 1.0 / np.sqrt(inputs + n)
        layer = LstmLayerParams(
            rng.uniform(-s, s, (4 * n, inputs)),
            rng.uniform(-s, s, (4 * n, n)),
            np.zeros(4 * n),
            *(rng.uniform(-s, s, n) if config.peepholes else np.zeros(n) for _ in PEEPHOLES),
        )
        layer.b[:n] = config.forget_bias
        layers.append(layer)
        inputs = n
    s = 1.0 / np.sqrt(n)
    return LstmModel(config, layers, rng.uniform(-s, s, (config.heads, n)), np.zeros(config.heads))


def zero_model(config: LstmConfig) -> LstmModel:
    layers = [LstmLayerParams.zeros(config.heads if k == 0 else config.neurons, config.neurons)
              for k in range(config.layers)]
    return LstmModel(config, layers, np.zeros((config.heads, config.neurons)), np.zeros(config.heads))


def rows_to_sequences(inputs: np.ndarray, heads: int) -> np.ndarray:
    """(B, m*I) block-ordered rows -> (B, I, m) step sequences."""
    inputs = np.asarray(inputs, dtype=float)
    if inputs.ndim == 1:
        inputs = inputs[None, :]
    b, width = inputs.shape
    if width % heads:
        raise DataError(f"row width {width} is not a multiple of {heads} heads")
    return inputs.reshape(b, heads, width // heads).transpose(0, 2, 1)


def _forward(model: LstmModel, seqs: np.ndarray):
    """Forward pass over (B, I, m) sequences; returns outputs and layer caches."""
    peep = model.config.peepholes
    x = np.ascontiguousarray(np.asarray(seqs, dtype=float).transpose(1, 0, 2))  # time-major
    caches = []
    for layer in model.layers:
        steps, b, width = x.shape
        n = layer.units
        xw = (x.reshape(steps * b, width) @ layer.W_x.T + layer.b).reshape(steps, b, 4 * n)
        cache = [np.empty((steps, b, n)) for _ in range(7)]  # f, i, g, o, c, tanh c, h
        _kernels.layer_forward(xw, np.ascontiguousarray(layer.W_h.T), layer.p_f, layer.p_i,
                               layer.p_o, peep, *cache)
        caches.append((x, cache))
        x = cache[6]
    h_top = x[-1]
    return h_top @ model.W_y.T + model.b_y, h_top, caches


def predict_rows(model: LstmModel, inputs) -> np.ndarray:
    """Raw head outputs (model space) for a batch of rows, shape (B, m)."""
    cfg = model.config
    inputs = np.atleast_2d(np.asarray(inputs, dtype=float))
    if inputs.shape[1] != cfg.input_width:
        raise DataError(f"model expects rows of width {cfg.input_width}, got {inputs.shape[1]}")
    y, _, _ = _forward(model, rows_to_sequences(inputs, cfg.heads))
    return y


def forward(model: LstmModel, input_row) -> np.ndarray:
    """Prediction of width ``m`` for a single row."""
    row = np.asarray(input_row, dtype=float)
    if row.ndim != 1:
        raise DataError("forward takes a single row; use predict_rows for batches")
    return predict_rows(model, row)[0]


def _check_batch(cfg: LstmConfig, inputs, targets):
    inputs = np.atleast_2d(np.asarray(inputs, dtype=float))
    if len(inputs) == 0:
        raise DataError("empty batch")
    targets = np.asarray(targets, dtype=float).reshape(len(inputs), -1)
    if inputs.shape[1] != cfg.input_width or targets.shape[1] != cfg.heads:
        raise DataError(f"batch shapes {inputs.shape}/{targets.shape} do not match the model")
    return inputs, targets


def _backward_into(model: LstmModel, inputs: np.ndarray, targets: np.ndarray,
                   grads: dict[str, np.ndarray]) -> float:
    cfg = model.config
    y, h_top, caches = _forward(model, rows_to_sequences(inputs, cfg.heads))
    err = y - targets
    loss = float(np.mean(err * err))
    if not np.isfinite(loss):
        raise NumericalError("non-finite loss")
    dy = 2.0 * err / err.size
    for g in grads.values():
        g[...] = 0.0
    grads["head.W"][...] = dy.T @ h_top
    grads["head.b"][...] = dy.sum(axis=0)

    dh = np.zeros_like(caches[-1][1][6])
    dh[-1] = dy @ model.W_y
    spare = np.zeros(cfg.neurons)
    for k in range(len(model.layers) - 1, -1, -1):
        layer = model.layers[k]
        x, cache = caches[k]
        steps, b, width = x.shape
        n = layer.units
        da = np.empty((steps, b, 4 * n))
        dp = [grads[f"layer{k}.{name}"] if cfg.peepholes else spare for name in PEEPHOLES]
        _kernels.layer_backward(np.ascontiguousarray(layer.W_h), layer.p_f, layer.p_i, layer.p_o,
                                cfg.peepholes, *cache[:6], dh, da, *dp)
        da2 = da.reshape(steps * b, 4 * n)
        h = cache[6]
        grads[f"layer{k}.W_x"][...] = da2.T @ x.reshape(steps * b, width)
        grads[f"layer{k}.W_h"][...] = da[1:].reshape(-1, 4 * n).T @ h[:-1].reshape(-1, n)
        grads[f"layer{k}.b"][...] = da2.sum(axis=0)
        dh = (da2 @ layer.W_x).reshape(steps, b, width)
    return loss


def backward(model: LstmModel, inputs, targets) -> tuple[float, dict[str, np.ndarray]]:
    """Mean squared error over the batch and its gradient for every parameter."""
    inputs, targets = _check_batch(model.config, inputs, targets)
    grads = {k: np.zeros_like(v) for k, v in model.parameters().items()}
    loss = _backward_into(model, inputs, targets, grads)
    return loss, grads


def _flat_views(model: LstmModel) -> tuple[np.ndarray, dict[str, np.ndarray]]:
    """Copy the trainable arrays into one buffer and rebind them as views."""
    params = model.parameters()
    flat = np.concatenate([p.ravel() for p in params.values()])
    views, offset = {}, 0
    for key, p in params.items():
        views[key] = flat[offset:offset + p.size].reshape(p.shape)
        offset += p.size
    for k, layer in enumerate(model.layers):
        for name in ("W_x", "W_h", "b", *PEEPHOLES):
            key = f"layer{k}.{name}"
            if key in views:
                setattr(layer, name, views[key])
    model.W_y, model.b_y = views["head.W"], views["head.b"]
    return flat, views


def mse(model: LstmModel, inputs, targets) -> float:
    y = predict_rows(model, inputs)
    return float(np.mean((y - np.asarray(targets, dtype=float).reshape(y.shape)) ** 2))


def train(frame, config: LstmConfig, scalers: tuple[ScalerParams, ...] | None = None,
          diff_order: int = 0) -> LstmModel:
    """Fit a fresh model to a (scaled) supervised or multi-scale frame.

    Runs exactly ``config.epochs`` epochs of shuffled mini-batch Adam; the
    generator seeded from ``config.seed`` drives both initialisation and
    shuffling, so identical inputs give bit-identical parameters.
    ``scalers`` and ``diff_order`` are stored on the model for
    :func:`predict_series`.
    """
    inputs = np.asarray(frame.inputs, dtype=float)
    targets = frame.target_matrix().astype(float)
    if inputs.shape[1] != config.input_width:
        raise DataError(f"frame rows have width {inputs.shape[1]}, config expects {config.input_width}")
    if targets.shape[1] != config.heads:
        raise DataError(f"frame has {targets.shape[1]} targets, config expects {config.heads}")
    if len(inputs) == 0:
        raise DataError("cannot train on an empty frame")

    rng = np.random.default_rng(config.seed)
    model = init_model(config, rng)
    model.scalers = scalers
    model.diff_order = diff_order
    theta, _ = _flat_views(model)
    gflat = np.zeros_like(theta)
    offset, grads = 0, {}
    for key, p in model.parameters().items():
        grads[key] = gflat[offset:offset + p.size].reshape(p.shape)
        offset += p.size
    m1 = np.zeros_like(theta)
    m2 = np.zeros_like(theta)
    lr, b1, b2, eps = config.learning_rate, config.beta1, config.beta2, config.epsilon

    model.loss_history.append(mse(model, inputs, targets))
    step = 0
    n = len(inputs)
    for epoch in range(config.epochs):
        order = rng.permutation(n)
        total = 0.0
        for start in range(0, n, config.batch_size):
            idx = order[start:start + config.batch_size]
            try:
                loss = _backward_into(model, inputs[idx], targets[idx], grads)
            except NumericalError:
                raise NumericalError(f"non-finite loss at epoch {epoch}, batch "
                                     f"{start // config.batch_size}") from None
            total += loss * len(idx)
            step += 1
            m1 *= b1
            m1 += (1.0 - b1) * gflat
            m2 *= b2
            m2 += (1.0 - b2) * gflat * gflat
            theta -= (lr / (1.0 - b1 ** step)) * m1 / (np.sqrt(m2 / (1.0 - b2 ** step)) + eps)
        model.loss_history.append(total / n)
    final = mse(model, inputs, targets)
    if not np.isfinite(final):
        raise NumericalError("training ended with a non-finite loss")
    model.loss_history.append(final)
    return model


def _scaled_inputs(model: LstmModel, histories: list[np.ndarray]) -> np.ndarray:
    cfg = model.config
    d = model.diff_order
    blocks = []
    for k, hist in enumerate(histories):
        diffs, _ = difference(hist[-(cfg.lag + d):], d)
        if model.scalers is not None:
            diffs = apply_scaler(diffs, model.scalers[k])
        blocks.append(diffs)
    return np.concatenate(blocks)


def _to_counts(model: LstmModel, raw: np.ndarray, histories: list[np.ndarray]) -> np.ndarray:
    out = np.empty(len(raw))
    for k, value in enumerate(raw):
        v = invert_scaler(value, model.scalers[k]) if model.scalers is not None else value
        out[k] = integrate_forecast([v], histories[k], model.diff_order)[0]
    return out


def predict_series(model: LstmModel, history, horizon: int) -> np.ndarray:
    """Iterated forecasts in occupant-count units, clamped at zero.

    ``history`` is one count sequence for a separate model, or the
    (15, 30, 60)-minute sequences for a combined model, all ending at the
    same hour boundary.  A combined model steps one hour at a time and
    returns shape (3, horizon); the finer scales' unobserved sub-intervals
    within each forecast hour are filled by repeating their predicted value.
    """
    cfg = model.config
    if horizon < 0:
        raise DataError("horizon must be non-negative")
    if cfg.heads == 1:
        histories = [np.asarray(history, dtype=float)]
    else:
        if len(history) != cfg.heads:
            raise DataError(f"combined model needs {cfg.heads} histories")
        histories = [np.asarray(h, dtype=float) for h in history]
    need = cfg.lag + model.diff_order
    for h in histories:
        if len(h) < need:
            raise DataError(f"history of length {len(h)} shorter than lag + d = {need}")
    repeats = (1,) if cfg.heads == 1 else (4, 2, 1)
    out = np.empty((cfg.heads, horizon))
    histories = [h.copy() for h in histories]
    for step in range(horizon):
        raw = forward(model, _scaled_inputs(model, histories))
        counts = np.maximum(_to_counts(model, raw, histories), 0.0)
        out[:, step] = counts
        histories = [np.r_[h, np.repeat(v, r)] for h, v, r in zip(histories, counts, repeats)]
    return out[0] if cfg.heads == 1 else out


def _tensor(arr: np.ndarray) -> dict:
    return {"shape": list(arr.shape), "data": [float(v).hex() for v in np.ravel(arr, order="C")]}


def _array(obj: dict) -> np.ndarray:
    return np.array([float.fromhex(v) for v in obj["data"]], dtype=float).reshape(obj["shape"])


def dumps(model: LstmModel) -> str:
    """Text container: JSON with row-major tensors as exact hex floats."""
    tensors = {}
    for k, layer in enumerate(model.layers):
        for name in ("W_x", "W_h", "b", *PEEPHOLES):
            tensors[f"layer{k}.{name}"] = _tensor(getattr(layer, name))
    tensors["head.W"] = _tensor(model.W_y)
    tensors["head.b"] = _tensor(model.b_y)
    scalers = None
    if model.scalers is not None:
        scalers = [{"kind": s.kind.value, "min": float(s.min).hex(), "max": float(s.max).hex()}
                   for s in model.scalers]
    doc = {"format": FORMAT_TAG, "config": asdict(model.config), "diff_order": model.diff_order,
           "scalers": scalers, "tensors": tensors}
    return json.dumps(doc, indent=1, sort_keys=True) + "\n"


def loads(text: str) -> LstmModel:
    doc = json.loads(text)
    if doc.get("format") != FORMAT_TAG:
        raise DataError(f"not an {FORMAT_TAG} model file")
    config = LstmConfig(**doc["config"])
    t = doc["tensors"]
    layers = [LstmLayerParams(*(_array(t[f"layer{k}.{name}"]) for name in ("W_x", "W_h", "b", *PEEPHOLES)))
              for k in range(config.layers)]
    scalers = None
    if doc["scalers"] is not None:
        scalers = tuple(ScalerParams(ScalerKind(s["kind"]), float.fromhex(s["min"]), float.fromhex(s["max"]))
                        for s in doc["scalers"])
    return LstmModel(config, layers, _array(t["head.W"]), _array(t["head.b"]), scalers, doc["diff_order"])

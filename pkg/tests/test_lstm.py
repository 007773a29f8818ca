import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from occucast.errors import DataError
from occucast.experiment import neurons_combined, neurons_separate
from occucast.lstm import (CellState, LstmConfig, LstmLayerParams, backward, cell_forward, dumps,
                           forward, init_model, loads, predict_rows, predict_series, train, zero_model)
from occucast.preprocess import (ScalerKind, SupervisedFrame, apply_scaler, difference, fit_scaler,
                                 to_supervised)
from occucast.ingest import OccupancySeries, Scope

from oracles import naive_forward, finite_difference_check


def seeded(neurons=3, layers=2, lag=3, heads=1, peepholes=True, seed=0, scale=1.0):
    cfg = LstmConfig(neurons, layers, lag, heads=heads, peepholes=peepholes, seed=seed)
    model = init_model(cfg)
    rng = np.random.default_rng(seed + 100)
    for p in model.parameters().values():
        p += rng.normal(0, 0.3 * scale, p.shape)  # break the init symmetry of biases
    return model


class TestCell:
    def test_zero_everything(self):
        s = cell_forward(LstmLayerParams.zeros(1, 1), [0.0], CellState.zeros(1))
        assert s.h.tolist() == [0.0] and s.c.tolist() == [0.0]

    def test_hand_evaluated_step(self):
        s = cell_forward(LstmLayerParams.zeros(1, 1), [0.0], CellState(np.zeros(1), np.ones(1)))
        assert s.c[0] == pytest.approx(0.5, abs=1e-15)
        assert s.h[0] == pytest.approx(0.2310585, abs=1e-7)
        assert s.h[0] == pytest.approx(0.5 * math.tanh(0.5), abs=1e-15)

    def test_zero_peepholes_equal_disabled(self, rng):
        p = LstmLayerParams(rng.normal(size=(8, 3)), rng.normal(size=(8, 2)), rng.normal(size=8),
                            np.zeros(2), np.zeros(2), np.zeros(2))
        prev = CellState(rng.normal(size=2), rng.normal(size=2))
        x = rng.normal(size=3)
        a, b = cell_forward(p, x, prev, True), cell_forward(p, x, prev, False)
        assert np.array_equal(a.h, b.h) and np.array_equal(a.c, b.c)

    def test_shape_mismatch(self):
        with pytest.raises(DataError):
            cell_forward(LstmLayerParams.zeros(2, 3), [0.0], CellState.zeros(3))


@given(st.integers(0, 10_000), st.floats(0.1, 20.0))
def test_gate_and_output_ranges(seed, spread):
    rng = np.random.default_rng(seed)
    p = LstmLayerParams(*(rng.normal(0, spread, shape) for shape in [(12, 2), (12, 3), (12,), (3,), (3,), (3,)]))
    s = CellState(rng.uniform(-1, 1, 3), rng.normal(0, spread, 3))
    out = cell_forward(p, rng.normal(0, spread, 2), s)
    assert np.all(np.abs(out.h) <= 1.0)


class TestForward:
    def test_zero_model_outputs_bias(self):
        model = zero_model(LstmConfig(4, 2, 3))
        model.b_y[:] = 0.7
        assert forward(model, np.arange(3.0)).tolist() == [0.7]

    def test_combined_width(self):
        model = init_model(LstmConfig(4, 1, 2, heads=3))
        assert forward(model, np.zeros(6)).shape == (3,)

    @pytest.mark.parametrize("heads,peep,layers", [(1, True, 1), (1, False, 2), (3, True, 2), (3, False, 3)])
    def test_matches_naive_oracle(self, rng, heads, peep, layers):
        model = seeded(neurons=2, layers=layers, lag=2 if heads == 1 else 3, heads=heads, peepholes=peep)
        for _ in range(5):
            row = rng.normal(size=model.config.input_width)
            np.testing.assert_allclose(forward(model, row), naive_forward(model, row), rtol=0, atol=1e-12)

    def test_batch_equals_rows(self, rng):
        model = seeded(neurons=5, layers=2, lag=4)
        rows = rng.normal(size=(7, 4))
        batch = predict_rows(model, rows)
        for r in range(7):
            np.testing.assert_allclose(batch[r], forward(model, rows[r]), rtol=0, atol=1e-14)

    def test_width_mismatch(self):
        with pytest.raises(DataError):
            forward(init_model(LstmConfig(2, 1, 3)), np.zeros(4))

    def test_peepholes_disabled_equals_zero_vectors(self, rng):
        on = seeded(neurons=3, layers=2, lag=3, peepholes=True)
        for layer in on.layers:
            layer.p_f[:] = layer.p_i[:] = layer.p_o[:] = 0.0
        off = seeded(neurons=3, layers=2, lag=3, peepholes=True)
        off.config = LstmConfig(3, 2, 3, peepholes=False)
        for a, b in zip(on.layers, off.layers):
            b.W_x, b.W_h, b.b = a.W_x, a.W_h, a.b
        off.W_y, off.b_y = on.W_y, on.b_y
        rows = rng.normal(size=(4, 3))
        assert np.array_equal(predict_rows(on, rows), predict_rows(off, rows))


class TestBackward:
    @pytest.mark.parametrize("peep", [True, False])
    @pytest.mark.parametrize("layers", [1, 2])
    @pytest.mark.parametrize("heads", [1, 3])
    def test_gradient_check(self, peep, layers, heads):
        model = seeded(neurons=4, layers=layers, lag=4, heads=heads, peepholes=peep, seed=layers)
        rng = np.random.default_rng(7)
        x = rng.normal(size=(5, model.config.input_width))
        y = rng.normal(size=(5, heads))
        assert finite_difference_check(model, x, y) < 1e-5

    def test_zero_targets_zero_model(self):
        model = zero_model(LstmConfig(3, 2, 3))
        loss, grads = backward(model, np.ones((4, 3)), np.zeros(4))
        assert loss == 0.0
        assert all(np.all(g == 0.0) for g in grads.values())

    def test_duplicated_batch_same_gradient(self, rng):
        model = seeded(neurons=3, layers=2, lag=3)
        x = rng.normal(size=(4, 3))
        y = rng.normal(size=4)
        _, g1 = backward(model, x, y)
        _, g2 = backward(model, np.vstack([x, x]), np.r_[y, y])
        for k in g1:
            np.testing.assert_allclose(g1[k], g2[k], rtol=1e-12, atol=1e-15)

    def test_empty_batch(self):
        with pytest.raises(DataError):
            backward(init_model(LstmConfig(2, 1, 2)), np.empty((0, 2)), np.empty(0))

    def test_non_finite_loss(self):
        from occucast.errors import NumericalError
        model = init_model(LstmConfig(2, 1, 2))
        model.b_y[:] = np.inf
        with pytest.raises(NumericalError):
            backward(model, np.zeros((1, 2)), np.zeros(1))


def sine_frames(n=500, period=24, lag=12, test_fraction=0.2):
    t = np.arange(n)
    x = np.sin(2 * np.pi * t / period)
    frame = to_supervised(x, lag)
    cut = int(len(frame) * (1 - test_fraction))
    train_f = SupervisedFrame(lag, frame.inputs[:cut], frame.targets[:cut])
    return train_f, frame.inputs[cut:], frame.targets[cut:]


class TestTrain:
    def test_sine_convergence(self):
        train_f, xt, yt = sine_frames()
        model = train(train_f, LstmConfig(8, 1, 12, epochs=200, seed=0))
        rmse = np.sqrt(np.mean((predict_rows(model, xt)[:, 0] - yt) ** 2))
        assert rmse < 0.1

    def test_constant_target(self, rng):
        x = rng.uniform(-1, 1, (64, 4))
        model = train(SupervisedFrame(4, x, np.zeros(64)), LstmConfig(4, 1, 4, epochs=60, seed=3))
        assert model.loss_history[-1] < 1e-4

    def test_bit_identical_reruns(self, rng):
        x = rng.normal(size=(40, 3))
        y = rng.normal(size=40)
        cfg = LstmConfig(4, 2, 3, batch_size=8, epochs=5, seed=11)
        a, b = train(SupervisedFrame(3, x, y), cfg), train(SupervisedFrame(3, x, y), cfg)
        assert dumps(a) == dumps(b)

    def test_loss_finite_and_decreasing(self):
        train_f, _, _ = sine_frames(n=200)
        model = train(train_f, LstmConfig(4, 2, 12, epochs=20))
        assert np.all(np.isfinite(model.loss_history))
        assert model.loss_history[-1] <= model.loss_history[0]

    def test_width_mismatch(self):
        with pytest.raises(DataError):
            train(SupervisedFrame(3, np.zeros((4, 3)), np.zeros(4)), LstmConfig(2, 1, 4))

    def test_forget_bias_and_init_range(self):
        cfg = LstmConfig(6, 2, 5, seed=4)
        model = init_model(cfg)
        first = model.layers[0]
        assert np.all(first.b[:6] == 1.0) and np.all(first.b[6:] == 0.0)
        assert np.abs(first.W_x).max() <= 1 / math.sqrt(1 + 6)
        assert np.abs(model.layers[1].W_h).max() <= 1 / math.sqrt(12)


class TestNeuronCounts:
    @pytest.mark.parametrize("n,h,i", [(48, 3, 24), (8, 1, 4), (1, 1, 1)])
    def test_separate(self, n, h, i):
        assert LstmConfig(n, h, i).neuron_count == neurons_separate(n, h, i)

    def test_combined_in_out_widths(self):
        cfg = LstmConfig(32, 2, 24, heads=3)
        model = init_model(cfg)
        assert cfg.input_width == 72 and model.W_y.shape[0] == 3
        assert cfg.neuron_count == neurons_combined(32, 2, 24, 3) == 139


def _hourly(values, scale, start=1452816000):
    return OccupancySeries(scale, Scope.building(), start, np.asarray(values))


class TestPredictSeries:
    def test_horizon_zero(self):
        model = init_model(LstmConfig(2, 1, 3))
        assert predict_series(model, np.arange(10.0), 0).size == 0

    def test_constant_series(self):
        y = np.full(300, 12.0)
        y[::2] += 1.0  # alternate so the differenced scaler has a range
        diffs, _ = difference(y, 1)
        frame = to_supervised(diffs, 4)
        scaler = fit_scaler(diffs, ScalerKind.MINMAX_SYMMETRIC)
        scaled = SupervisedFrame(4, apply_scaler(frame.inputs, scaler), apply_scaler(frame.targets, scaler))
        model = train(scaled, LstmConfig(6, 1, 4, epochs=60, seed=1), (scaler,), 1)
        pred = predict_series(model, y, 6)
        expect = np.where(np.arange(300, 306) % 2 == 0, 13.0, 12.0)
        assert np.all(np.abs(np.round(pred) - expect) <= 0.5)

    def test_non_negative(self):
        model = zero_model(LstmConfig(2, 1, 2))
        model.b_y[:] = -5.0
        pred = predict_series(model, np.array([1.0, 0.0, 2.0]), 4)
        assert np.all(pred >= 0.0)

    def test_combined_returns_three_sequences(self, rng):
        s = [_hourly(rng.integers(0, 20, 48 * 60 // m), m) for m in (15, 30, 60)]
        model = init_model(LstmConfig(3, 1, 4, heads=3))
        pred = predict_series(model, [x.values for x in s], 5)
        assert pred.shape == (3, 5)

    def test_insufficient_history(self):
        with pytest.raises(DataError):
            predict_series(init_model(LstmConfig(2, 1, 5)), np.arange(3.0), 1)


def test_serialisation_bit_exact(rng):
    model = seeded(neurons=3, layers=2, lag=2, heads=3, peepholes=True)
    model.scalers = (fit_scaler([0, 1], ScalerKind.MINMAX_SYMMETRIC),) * 3
    model.diff_order = 1
    text = dumps(model)
    back = loads(text)
    assert dumps(back) == text
    rows = rng.normal(size=(3, 6))
    assert np.array_equal(predict_rows(back, rows), predict_rows(model, rows))


def test_loads_rejects_other_formats():
    with pytest.raises(DataError):
        loads('{"format": "other"}')

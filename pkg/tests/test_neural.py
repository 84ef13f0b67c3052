import math

import numpy as np
import pytest

from clockbias.errors import (
    CacheMismatch,
    DegenerateSplit,
    DimensionMismatch,
    EmptyDataset,
    EmptyWindow,
)
from clockbias.neural import layers as L
from clockbias.neural.networks import (
    LstmNetwork,
    MlpNetwork,
    RnnNetwork,
    build_network,
    mlp_forward,
    network_backward,
    network_forward,
    network_from_architecture,
)
from clockbias.neural.optim import AdamState, adam_update, clip_by_global_norm, global_norm
from clockbias.neural.training import TrainConfig, predict_recursive, train
from clockbias.rng import SplitMix64
from clockbias.series import UniformSeries
from clockbias.windows import WindowedDataset, make_windows

from oracles import (
    ALPHA,
    LAMBDA,
    dense_scalar,
    gradient_check,
    lstm_network_scalar,
    lstm_step_scalar,
    mlp_scalar,
    randomize,
)

GRAD_FLOOR = 1e-8


# ------------------------------------------------------------------ cells


def test_zero_lstm_cell():
    p = L.LstmLayerParams.zeros(1, 3)
    h, c, (_, _, _, i, f, o, g, _) = L.lstm_cell_forward([0.7], np.zeros(3), np.zeros(3), p)
    assert np.all(i == 0.5) and np.all(f == 0.5) and np.all(o == 0.5) and np.all(g == 0.0)
    assert np.all(c == 0.0) and np.all(h == 0.0)


def test_forget_gate_flushes_state():
    p = L.LstmLayerParams.zeros(1, 2)
    p.b["f"][:] = -20.0
    h, c, _ = L.lstm_cell_forward([1.0], [0.3, -0.4], [5.0, -7.0], p)
    assert np.max(np.abs(c)) < 1e-7 and np.max(np.abs(h)) < 1e-7


def hand_cell():
    W = {"i": [[0.1], [-0.2]], "f": [[0.3], [0.05]], "o": [[-0.15], [0.25]], "g": [[0.4], [-0.35]]}
    U = {k: [[0.01, -0.02], [0.03, 0.04]] for k in "ifog"}
    b = {"i": [0.01, 0.02], "f": [1.0, 1.0], "o": [-0.03, 0.0], "g": [0.05, -0.05]}
    p = L.LstmLayerParams({k: np.array(v) for k, v in W.items()},
                          {k: np.array(v) for k, v in U.items()},
                          {k: np.array(v) for k, v in b.items()})
    return p, W, U, b


def test_lstm_cell_matches_scalar_oracle():
    p, W, U, b = hand_cell()
    h, c, _ = L.lstm_cell_forward([1.0], [0.0, 0.0], [0.0, 0.0], p)
    h_ref, c_ref = lstm_step_scalar([1.0], [0.0, 0.0], [0.0, 0.0], W, U, b)
    np.testing.assert_allclose(h, h_ref, rtol=1e-12, atol=0)
    np.testing.assert_allclose(c, c_ref, rtol=1e-12, atol=0)


def test_lstm_cell_gate_ranges():
    rng = np.random.default_rng(0)
    p = L.LstmLayerParams.glorot(SplitMix64(1), 3, 5)
    for _ in range(50):
        h, c, (_, _, _, i, f, o, g, _) = L.lstm_cell_forward(
            rng.normal(size=3) * 3, rng.uniform(-1, 1, 5), rng.normal(size=5) * 2, p)
        for gate in (i, f, o):
            assert np.all((gate > 0) & (gate < 1))
        assert np.all(np.abs(g) < 1) and np.all(np.abs(h) <= 1)


def test_cells_reject_bad_dimensions():
    with pytest.raises(DimensionMismatch):
        L.lstm_cell_forward([1.0, 2.0], [0, 0], [0, 0], L.LstmLayerParams.zeros(1, 2))
    with pytest.raises(DimensionMismatch):
        L.rnn_cell_forward([1.0], [0.0], L.RnnLayerParams.zeros(1, 2))
    with pytest.raises(DimensionMismatch):
        L.dense_forward([1.0, 2.0, 3.0], L.DenseLayerParams.zeros(2, 1))


def test_rnn_cell_zero_and_formula():
    assert np.all(L.rnn_cell_forward([3.0], [0.5, -0.5], L.RnnLayerParams.zeros(1, 2)) == 0)
    p = L.RnnLayerParams(np.array([[0.5], [-1.0]]), np.array([[0.1, 0.2], [0.3, 0.4]]),
                         np.array([0.05, 0.0]))
    h = L.rnn_cell_forward([2.0], [1.0, -1.0], p)
    assert h.tolist() == pytest.approx([math.tanh(1.0 - 0.1 + 0.05), math.tanh(-2.0 - 0.1)], abs=1e-15)


def test_selu_values():
    assert float(L.selu(1.0)) == 1.0507009873554805
    assert float(L.selu(-1.0)) == pytest.approx(-1.1113, abs=1e-4)
    assert float(L.selu(-1.0)) == pytest.approx(LAMBDA * ALPHA * (math.exp(-1) - 1), abs=1e-15)
    assert float(L.selu(0.0)) == 0.0


def test_dense_identity_and_oracle():
    x = np.array([0.3, -2.0, 5.0])
    assert L.dense_forward(x, L.DenseLayerParams(np.eye(3), np.zeros(3))).tolist() == x.tolist()
    W = [[0.2, -0.5, 0.1], [1.5, 0.0, -0.3]]
    b = [0.1, -0.2]
    got = L.dense_forward(x, L.DenseLayerParams(np.array(W), np.array(b), "selu"))
    np.testing.assert_allclose(got, dense_scalar(x.tolist(), W, b, "selu"), rtol=1e-14)


def test_sigmoid_is_stable():
    z = np.array([-1000.0, -30.0, 0.0, 30.0, 1000.0])
    s = L.sigmoid(z)
    assert np.all(np.isfinite(s)) and s[2] == 0.5 and s[0] == 0.0 and s[-1] == 1.0


# ---------------------------------------------------------------- networks


def tiny_lstm(seed, window_len=4):
    return randomize(LstmNetwork.create((3, 2), (2,), window_len=window_len), seed)


def test_zero_networks_predict_zero():
    w = np.linspace(-1, 1, 12)[:, None]
    for net in (LstmNetwork.create((3, 2), (2,), zero=True), RnnNetwork.create(zero=True),
                MlpNetwork.create(zero=True)):
        assert network_forward(net, w)[0] == 0.0


@pytest.mark.parametrize("seed", range(3))
def test_lstm_forward_matches_oracle(seed):
    net = tiny_lstm(seed)
    window = np.random.default_rng(100 + seed).normal(size=(4, 1))
    pred, _ = network_forward(net, window)
    assert pred == pytest.approx(lstm_network_scalar(net, window), rel=1e-12, abs=0)


def test_window_of_one_equals_single_cell():
    net = tiny_lstm(7)
    pred, _ = network_forward(net, [[0.42]])
    h1, _, _ = L.lstm_cell_forward([0.42], np.zeros(3), np.zeros(3), net.lstm_layers[0])
    h2, _, _ = L.lstm_cell_forward(h1, np.zeros(2), np.zeros(2), net.lstm_layers[1])
    y = h2
    for layer in net.dense_layers:
        y = L.dense_forward(y, layer)
    assert pred == float(y[0])


def test_mlp_forward_matches_oracle():
    net = randomize(MlpNetwork.create((6, 4), window_len=4), 3)
    window = [[0.1], [-0.4], [0.9], [0.2]]
    assert mlp_forward(window, net.dense_layers) == pytest.approx(
        mlp_scalar(window, net.dense_layers), rel=1e-12)
    assert float(net.predict(np.array(window)[None])[0]) == mlp_forward(window, net.dense_layers)


def test_batch_equals_individual_windows():
    net = tiny_lstm(11)
    X = np.random.default_rng(0).normal(size=(5, 4, 1))
    batch = net.predict(X)
    single = [network_forward(net, w)[0] for w in X]
    np.testing.assert_allclose(batch, single, rtol=1e-14, atol=1e-15)


@pytest.mark.parametrize("make", [
    lambda s: tiny_lstm(s),
    lambda s: randomize(RnnNetwork.create((4,), (), window_len=4), s),
    lambda s: randomize(MlpNetwork.create((6, 4), window_len=4), s),
], ids=["lstm", "rnn", "mlp"])
def test_gradients_match_finite_differences(make):
    for seed in range(3):
        window = np.random.default_rng(seed).normal(size=(2, 4, 1))
        assert gradient_check(make(seed), window, GRAD_FLOOR) < 1e-4


def test_zero_upstream_and_terminal_bias_gradient():
    net = tiny_lstm(5)
    pred, cache = network_forward(net, np.ones((4, 1)))
    grads = network_backward(net, cache, 0.0)
    assert all(np.all(g == 0) for g in grads.values())
    grads = network_backward(net, cache, 2.5)
    last = len(net.dense_layers) - 1
    assert grads[f"dense{last}.b"].tolist() == [2.5]


def test_cache_mismatch():
    a, b = tiny_lstm(1), tiny_lstm(1)
    _, cache = network_forward(a, np.ones((4, 1)))
    with pytest.raises(CacheMismatch):
        b.backward(cache, 1.0)
    with pytest.raises(CacheMismatch):
        a.backward(cache, [1.0, 2.0])


def test_network_input_errors():
    net = tiny_lstm(0)
    with pytest.raises(EmptyWindow):
        network_forward(net, np.zeros((0, 1)))
    with pytest.raises(DimensionMismatch):
        network_forward(net, np.zeros((4, 2)))
    with pytest.raises(DimensionMismatch):
        MlpNetwork.create(window_len=4).predict(np.zeros((1, 5, 1)))


def test_init_is_seeded_glorot_with_unit_forget_bias():
    a = build_network("lstm", "tiny", seed=9)
    b = build_network("lstm", "tiny", seed=9)
    c = build_network("lstm", "tiny", seed=10)
    pa, pb, pc = a.parameters(), b.parameters(), c.parameters()
    assert all(np.array_equal(pa[k], pb[k]) for k in pa)
    assert any(not np.array_equal(pa[k], pc[k]) for k in pa)
    for name, arr in pa.items():
        if name.split(".")[1].startswith(("W", "U")) or name.endswith(".W"):
            fan_out, fan_in = arr.shape
            assert np.max(np.abs(arr)) <= math.sqrt(6.0 / (fan_in + fan_out))
        elif name.endswith(".b_f"):
            assert np.all(arr == 1.0)
        else:
            assert np.all(arr == 0.0)


def test_profiles_and_architecture_round_trip():
    full = build_network("lstm", "full")
    assert full.architecture()["units"] == [512, 256]
    assert full.architecture()["dense"] == [128, 64, 32]
    assert len(full.dense_layers) == 4 and full.dense_layers[-1].activation == "linear"
    for kind in ("lstm", "rnn", "mlp"):
        net = build_network(kind, "tiny", seed=1)
        clone = network_from_architecture(net.architecture())
        clone.load_parameters(net.parameters())
        w = np.linspace(0, 1, 12)[:, None]
        assert network_forward(clone, w)[0] == network_forward(net, w)[0]


# ------------------------------------------------------------------- Adam


def test_adam_first_step():
    params = {"w": np.zeros(4)}
    state = AdamState.for_params(params)
    adam_update(params, {"w": np.ones(4)}, state, 0.001)
    assert state.t == 1
    np.testing.assert_allclose(params["w"], -0.001 / (1.0 + 1e-8), rtol=1e-14)
    assert params["w"][0] == pytest.approx(-0.000999999, abs=1e-9)


def test_adam_zero_gradient_keeps_params():
    params = {"w": np.array([1.0, -2.0])}
    state = AdamState.for_params(params)
    adam_update(params, {"w": np.zeros(2)}, state, 0.001)
    assert params["w"].tolist() == [1.0, -2.0]


def test_adam_two_steps():
    g = 0.3
    params = {"w": np.array([0.5])}
    state = AdamState.for_params(params)
    adam_update(params, {"w": np.array([g])}, state, 0.01)
    adam_update(params, {"w": np.array([g])}, state, 0.01)
    m1, v1 = 0.1 * g, 0.001 * g * g
    m2, v2 = 0.9 * m1 + 0.1 * g, 0.999 * v1 + 0.001 * g * g
    step1 = 0.01 * (m1 / 0.1) / (math.sqrt(v1 / 0.001) + 1e-8)
    step2 = 0.01 * (m2 / (1 - 0.81)) / (math.sqrt(v2 / (1 - 0.999 ** 2)) + 1e-8)
    assert state.t == 2
    assert state.m["w"][0] == pytest.approx(m2, rel=1e-15)
    assert state.v["w"][0] == pytest.approx(v2, rel=1e-15)
    assert params["w"][0] == pytest.approx(0.5 - step1 - step2, rel=1e-15)


def test_adam_shape_errors():
    with pytest.raises(DimensionMismatch):
        adam_update({"w": np.zeros(2)}, {"w": np.zeros(3)}, AdamState(), 0.1)
    with pytest.raises(DimensionMismatch):
        adam_update({"w": np.zeros(2)}, {"v": np.zeros(2)}, AdamState(), 0.1)


def test_clip_by_global_norm():
    grads = {"a": np.array([3.0]), "b": np.array([4.0])}
    assert clip_by_global_norm(grads, 1.0) == 5.0
    assert global_norm(grads) == pytest.approx(1.0, abs=1e-15)
    untouched = {"a": np.array([0.1])}
    clip_by_global_norm(untouched, 5.0)
    assert untouched["a"][0] == 0.1


# --------------------------------------------------------------- training


def sine_series(n=400, period=36.0, amp=1.0, noise=0.0, seed=0):
    t = np.arange(n)
    values = amp * np.sin(2 * np.pi * t / period)
    if noise:
        values = values + SplitMix64(seed).normal(n, noise)
    return UniformSeries(0.0, 600.0, values)


def test_make_windows_examples():
    d = make_windows(UniformSeries(0.0, 1.0, [1.0, 2.0, 3.0, 4.0]), 2)
    assert d.windows[..., 0].tolist() == [[1, 2], [2, 3]] and d.targets.tolist() == [3, 4]
    assert len(make_windows(UniformSeries(0.0, 1.0, np.arange(100.0)), 12)) == 88


def test_zero_targets_stop_at_patience():
    data = WindowedDataset(np.random.default_rng(0).normal(size=(40, 12, 1)), np.zeros(40), 12, 600.0)
    net = build_network("lstm", "tiny")
    for layer in net.dense_layers[-1:]:
        layer.W[...] = 0.0
        layer.b[...] = 0.0
    trained, hist = train(net, data, TrainConfig(seed=1))
    assert hist.train_loss[0] == 0.0
    assert hist.epochs == 4 and hist.stopped_early and hist.best_epoch == 0
    assert set(hist.val_loss) == {0.0}


def test_training_is_deterministic():
    data = make_windows(sine_series(noise=0.1), 12)
    cfg = TrainConfig(seed=3, max_epochs=3)
    net = build_network("rnn", "tiny", seed=1)
    a, ha = train(net, data, cfg)
    b, hb = train(net, data, cfg)
    assert ha == hb
    assert all(v.tobytes() == b.parameters()[k].tobytes() for k, v in a.parameters().items())


def test_training_reduces_loss():
    data = make_windows(sine_series(noise=0.05, seed=4), 12)
    _, hist = train(build_network("lstm", "tiny", seed=2), data, TrainConfig(seed=2))
    assert hist.train_loss[-1] < hist.train_loss[0]
    assert all(math.isfinite(v) for v in hist.train_loss + hist.val_loss)


def test_train_does_not_mutate_input_network():
    net = build_network("mlp", "tiny", seed=0)
    before = {k: v.copy() for k, v in net.parameters().items()}
    train(net, make_windows(sine_series(), 12), TrainConfig(max_epochs=1))
    assert all(np.array_equal(before[k], v) for k, v in net.parameters().items())


def test_train_split_errors():
    empty = WindowedDataset(np.zeros((0, 12, 1)), np.zeros(0), 12, 600.0)
    with pytest.raises(EmptyDataset):
        train(build_network("mlp", "tiny"), empty, TrainConfig())
    one = WindowedDataset(np.zeros((1, 12, 1)), np.zeros(1), 12, 600.0)
    with pytest.raises(DegenerateSplit):
        train(build_network("mlp", "tiny"), one, TrainConfig())


def test_predict_recursive_constant_network():
    net = MlpNetwork.create(window_len=12, zero=True)
    net.dense_layers[-1].b[0] = 0.7
    assert predict_recursive(net, np.zeros(12), 5) == [0.7] * 5


def test_predict_recursive_horizon_one_and_errors():
    net = build_network("lstm", "tiny", seed=3)
    w = np.sin(np.arange(12.0))
    assert predict_recursive(net, w, 1) == [network_forward(net, w)[0]]
    with pytest.raises(EmptyWindow):
        predict_recursive(net, [], 3)


def test_closed_loop_sine_stays_bounded():
    amp = 1.0
    u = sine_series(amp=amp)
    trained, _ = train(build_network("lstm", "tiny", seed=0), make_windows(u, 12), TrainConfig(seed=0))
    traj = predict_recursive(trained, u.values[-12:], 50)
    assert np.max(np.abs(traj)) <= 2 * amp

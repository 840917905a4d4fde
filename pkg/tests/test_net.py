import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from takensnet.embed import PevDataset, SearchSpace, build_pev, make_resampling
from takensnet.errors import DivergenceError, ValidationError
from takensnet.net import (
    NetConfig, Network, cost, epoch, forward, gradient_check, hidden_size,
    init_network, sample_gradients, train,
)
from takensnet.series import SystemSpec, generate, normalize


def _data(X, y):
    X = np.asarray(X, dtype=float)
    return PevDataset(X, np.asarray(y, dtype=float), np.arange(len(y)))


def _random_net(N, L, seed, output="sigmoid", lo=0.05, hi=0.8):
    """Weights of random sign with magnitude in [lo, hi], away from the |w| kink."""
    rng = np.random.default_rng(seed)
    mag = lambda *s: rng.uniform(lo, hi, size=s) * rng.choice([-1.0, 1.0], size=s)  # noqa: E731
    cfg = NetConfig(N, n_hidden=L, output=output, seed=seed)
    return Network(cfg, mag(N, L), mag(L), mag(L), mag(1))


def _zero_net(N, L, output="identity", b_out=0.0):
    cfg = NetConfig(N, n_hidden=L, output=output)
    return Network(cfg, np.zeros((N, L)), np.zeros(L), np.zeros(L), [b_out])


# --- configuration and init -------------------------------------------------

def test_hidden_size_natural_log():
    assert hidden_size(12) == 4
    assert hidden_size(30) == 5
    assert NetConfig(12).n_hidden == 4
    assert NetConfig(12, n_hidden=7).n_hidden == 7


def test_table_defaults():
    c = NetConfig(12)
    assert (c.eta, c.alpha, c.lam, c.epochs, c.c_max, c.init_range) == (0.1, 0.2, 0.001, 500, 0.001, 0.1)
    assert c.n_outputs == 1


@pytest.mark.parametrize("kw", [
    {"n_inputs": 0}, {"n_inputs": 3, "n_outputs": 2}, {"n_inputs": 3, "eta": -1},
    {"n_inputs": 3, "alpha": 1.0}, {"n_inputs": 3, "epochs": -1},
    {"n_inputs": 3, "output": "relu"}, {"n_inputs": 3, "penalty_per": "batch"},
])
def test_config_validation(kw):
    with pytest.raises(ValidationError):
        NetConfig(**kw)


@given(st.integers(1, 30), st.integers(0, 2**32 - 1))
@settings(max_examples=50)
def test_init_bounds_and_determinism(N, seed):
    a, b = init_network(NetConfig(N, seed=seed)), init_network(NetConfig(N, seed=seed))
    for p, q in zip(a.params, b.params):
        assert np.all(np.abs(p) <= 0.1)
        assert np.array_equal(p, q)
    for buf in (a.dw_in, a.dw_out, a.db_hidden, a.db_out):
        assert not buf.any()


# --- forward ---------------------------------------------------------------

def test_forward_all_zero():
    y, h = forward(_zero_net(3, 2), np.ones(3))
    assert y == 0.0 and np.all(h == 0.5)


def test_forward_single_unit():
    cfg = NetConfig(1, n_hidden=1, output="identity")
    net = Network(cfg, [[0.0]], [2.0], [0.0], [1.0])
    assert forward(net, [0.7])[0] == 2.0


def test_forward_sigmoid_output_wraps_identity():
    cfg = NetConfig(1, n_hidden=1, output="sigmoid")
    net = Network(cfg, [[0.0]], [2.0], [0.0], [1.0])
    assert forward(net, [0.7])[0] == pytest.approx(1 / (1 + math.exp(-2.0)), abs=1e-15)


@pytest.mark.parametrize("output", ["identity", "sigmoid"])
def test_forward_matches_straight_line(output):
    net = _random_net(6, 3, 11, output=output)
    x = np.random.default_rng(0).uniform(size=6)
    h = [1 / (1 + math.exp(-(sum(x[i] * net.w_in[i, j] for i in range(6)) + net.b_hidden[j])))
         for j in range(3)]
    z = sum(net.w_out[j] * h[j] for j in range(3)) + net.b_out[0]
    expected = z if output == "identity" else 1 / (1 + math.exp(-z))
    y, hid = forward(net, x)
    assert abs(y - expected) < 1e-12
    assert np.allclose(hid, h, atol=1e-12)


@given(arrays(float, 5, elements=st.floats(-1e300, 1e300)))
def test_forward_finite_and_bounded(x):
    y, h = forward(_random_net(5, 3, 2, output="identity"), x)
    assert np.isfinite(y) and np.all(np.abs(h) <= 1)


# --- gradients -------------------------------------------------------------

@pytest.mark.parametrize("output", ["identity", "sigmoid"])
def test_gradient_check_no_penalty(output):
    rng = np.random.default_rng(1)
    for seed in range(20):
        net = _random_net(8, 3, seed, output=output)
        worst = gradient_check(net, (rng.uniform(size=8), rng.uniform()), lam=0.0)
        assert worst < 1e-6


@pytest.mark.parametrize("output", ["identity", "sigmoid"])
def test_gradient_check_with_penalty(output):
    rng = np.random.default_rng(2)
    for seed in range(20):
        net = _random_net(8, 3, seed, output=output)
        worst = gradient_check(net, (rng.uniform(size=8), rng.uniform()), lam=0.001)
        assert worst < 1e-5


def test_gradient_check_leaves_net_untouched():
    net = _random_net(4, 2, 3)
    before = [p.copy() for p in net.params]
    gradient_check(net, (np.ones(4), 0.3), lam=0.01)
    assert all(np.array_equal(a, b) for a, b in zip(before, net.params))


def test_zero_input_gives_pure_penalty_gradient():
    net = _random_net(5, 3, 4)
    lam = 0.01
    _, g_in, *_ = sample_gradients(net, np.zeros(5), 0.7, lam)
    assert np.array_equal(g_in, lam * np.sign(net.w_in))
    _, g_in0, *_ = sample_gradients(net, np.zeros(5), 0.7, 0.0)
    assert not g_in0.any()


def test_subgradient_zero_at_zero_weight():
    net = _zero_net(2, 2)
    _, g_in, *_ = sample_gradients(net, np.zeros(2), 0.0, 1.0)
    assert not g_in.any()


# --- epoch and train ---------------------------------------------------------

def test_zero_net_single_sample_cost():
    net = _zero_net(3, 2, b_out=0.4)
    net.config.lam = 0.0
    d = _data([[0.2, 0.5, 0.1]], [0.0])
    # w_out = 0 so yhat is b_out regardless of the input
    assert cost(net, d, [0]) == pytest.approx(0.5 * 0.4 ** 2, abs=1e-15)


def test_cost_at_least_error_sum():
    net = _random_net(4, 2, 5)
    net.config.lam = 0.5
    d = _data(np.random.default_rng(0).uniform(size=(10, 4)), np.linspace(0, 1, 10))
    c = cost(net, d, np.arange(10))
    net.config.lam = 0.0
    assert c >= cost(net, d, np.arange(10))


@pytest.mark.parametrize("seed", range(5))
def test_no_forgetting_descends_on_toy_pair(seed):
    d = _data([[0.0, 1.0], [1.0, 0.0]], [0.2, 0.8])
    net = init_network(NetConfig(2, n_hidden=2, lam=0.0, seed=seed))
    costs = [epoch(net, d, [0, 1]) for _ in range(10)]
    assert all(b < a for a, b in zip(costs, costs[1:]))


@pytest.mark.parametrize("seed", range(5))
def test_no_forgetting_descends_identity_output(seed):
    # online steps in a fixed order end in a small limit cycle, so strict
    # descent is only required before the cost levels off
    d = _data([[0.0, 1.0], [1.0, 0.0]], [0.2, 0.8])
    net = init_network(NetConfig(2, n_hidden=2, lam=0.0, output="identity", seed=seed))
    c0 = cost(net, d, [0, 1])
    costs = [epoch(net, d, [0, 1]) for _ in range(10)]
    assert all(b < a for a, b in zip(costs[:5], costs[1:5]))
    assert costs[-1] < 0.5 * c0


def test_strong_forgetting_kills_input_weights():
    rng = np.random.default_rng(0)
    d = _data(rng.uniform(size=(50, 6)), rng.uniform(size=50))
    cfg = NetConfig(6, lam=1.0, epochs=200, c_max=0.0, seed=1)
    net, _ = train(d, np.arange(50), cfg)
    assert np.abs(net.w_in).max() < 0.01


def test_per_sample_forgetting_oscillates_at_step_scale():
    # a full lam * sign(w) on every step cannot settle closer to zero than
    # about eta * lam / (1 - alpha)
    rng = np.random.default_rng(0)
    d = _data(rng.uniform(size=(50, 6)), rng.uniform(size=50))
    cfg = NetConfig(6, lam=1.0, epochs=200, c_max=0.0, penalty_per="sample", seed=1)
    net, _ = train(d, np.arange(50), cfg)
    bound = cfg.eta * cfg.lam / (1 - cfg.alpha)
    assert np.abs(net.w_in).max() < 1.5 * bound


def test_zero_epochs():
    d = _data(np.ones((4, 3)), np.ones(4))
    cfg = NetConfig(3, epochs=0)
    net, rep = train(d, np.arange(4), cfg)
    assert rep.stop_reason == "epoch_limit" and rep.epochs_run == 0
    assert all(np.array_equal(p, q) for p, q in zip(net.params, init_network(cfg).params))


def test_constant_target_descends():
    d = _data(np.random.default_rng(1).uniform(size=(30, 4)), np.full(30, 0.3))
    cfg = NetConfig(4, lam=0.0, epochs=20, c_max=0.0)
    initial = cost(init_network(cfg), d, np.arange(30))
    _, rep = train(d, np.arange(30), cfg)
    assert rep.final_cost < initial


def test_cost_reached_stops_early():
    d = _data(np.random.default_rng(1).uniform(size=(30, 4)), np.full(30, 0.3))
    _, rep = train(d, np.arange(30), NetConfig(4, lam=0.0, c_max=0.01, output="identity"))
    assert rep.stop_reason == "cost_reached"
    assert rep.epochs_run < 500
    assert rep.final_cost <= 0.01
    assert len(rep.cost_history) == rep.epochs_run


def test_logistic_table_defaults_run_full_budget():
    ts = normalize(generate(SystemSpec("logistic", n=1000)))
    d = build_pev(ts, SearchSpace(5, 3))
    tr, _ = make_resampling(len(d), 1, 0.75, 0).folds[0]
    _, rep = train(d, tr, NetConfig(12))
    assert rep.stop_reason == "epoch_limit" and rep.epochs_run == 500
    assert math.isfinite(rep.final_cost)


def test_zero_step_size_freezes_network():
    rng = np.random.default_rng(0)
    d = _data(rng.uniform(size=(20, 4)), rng.uniform(size=20))
    cfg = NetConfig(4, eta=0.0, epochs=25, c_max=0.0)
    net, _ = train(d, np.arange(20), cfg)
    assert all(np.array_equal(p, q) for p, q in zip(net.params, init_network(cfg).params))


def test_training_bit_reproducible():
    rng = np.random.default_rng(0)
    d = _data(rng.uniform(size=(40, 5)), rng.uniform(size=40))
    cfg = NetConfig(5, epochs=30, seed=7)
    a, ra = train(d, np.arange(40), cfg)
    b, rb = train(d, np.arange(40), cfg)
    assert ra.cost_history == rb.cost_history
    assert all(np.array_equal(p, q) for p, q in zip(a.params, b.params))


def test_divergence_reported():
    rng = np.random.default_rng(0)
    d = _data(rng.uniform(size=(20, 3)) * 100, rng.uniform(size=20) * 1e3)
    cfg = NetConfig(3, eta=1e6, output="identity", epochs=50)
    with np.errstate(all="ignore"), pytest.raises(DivergenceError, match="smaller step"):
        train(d, np.arange(20), cfg)


def test_training_validates_inputs():
    d = _data(np.ones((4, 3)), np.ones(4))
    with pytest.raises(ValidationError):
        train(d, np.arange(4), NetConfig(5))
    with pytest.raises(ValidationError):
        train(d, [], NetConfig(3))


# --- serialization ---------------------------------------------------------

def test_snapshot_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    d = _data(rng.uniform(size=(30, 4)), rng.uniform(size=30))
    net, _ = train(d, np.arange(30), NetConfig(4, epochs=5, seed=3))
    back = Network.load(net.save(tmp_path / "net.json"))
    assert back.config == net.config
    for a, b in zip((*net.params, net.dw_in, net.dw_out), (*back.params, back.dw_in, back.dw_out)):
        assert np.array_equal(a, b)
    # resuming from the snapshot continues identically
    c1 = epoch(net, d, np.arange(30))
    c2 = epoch(back, d, np.arange(30))
    assert c1 == c2

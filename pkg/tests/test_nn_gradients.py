"""Finite-difference verification of every analytic gradient.

The oracle perturbs each parameter entry in place and recomputes the loss
(central differences, eps=1e-5); the analytic side is the backward pass
under test. Shapes stay small (<= 8) and everything runs in float64.
"""

import numpy as np
import pytest

from visact.nn import (
    LstmParams,
    MlpParams,
    bce_loss,
    embedding_backward,
    embedding_forward,
    lstm_backward,
    lstm_forward,
    mlp_backward,
    mlp_forward,
    rmsprop_step,
)

EPS = 1e-5
TOL = 1e-4
N_SEEDS = 24


def fd_gradient(loss_fn, param: np.ndarray, eps: float = EPS) -> np.ndarray:
    grad = np.zeros_like(param)
    flat_p = param.ravel()
    flat_g = grad.ravel()
    for i in range(param.size):
        orig = flat_p[i]
        flat_p[i] = orig + eps
        up = loss_fn()
        flat_p[i] = orig - eps
        down = loss_fn()
        flat_p[i] = orig
        flat_g[i] = (up - down) / (2.0 * eps)
    return grad


def rel_err(analytic: np.ndarray, numeric: np.ndarray) -> float:
    scale = max(1e-8, float(np.abs(analytic).max()), float(np.abs(numeric).max()))
    return float(np.abs(analytic - numeric).max()) / scale


def random_shapes(rng):
    batch = int(rng.integers(1, 4))
    steps = int(rng.integers(1, 5))
    dim = int(rng.integers(2, 9))
    hidden = int(rng.integers(2, 9))
    return batch, steps, dim, hidden


def jitter_biases(params: MlpParams, rng) -> None:
    # keep pre-activations away from the ReLU kink, where central
    # differences and the subgradient legitimately disagree
    for i, (w, b) in enumerate(params.layers):
        params.layers[i] = (w, b + rng.normal(0.0, 0.3, size=b.shape))


@pytest.mark.parametrize("seed", range(N_SEEDS))
def test_lstm_gradients(seed):
    rng = np.random.default_rng(seed)
    batch, steps, dim, hidden = random_shapes(rng)
    params = LstmParams.init(dim, hidden, rng)
    xs = rng.normal(size=(batch, steps, dim))
    lengths = rng.integers(1, steps + 1, size=batch)
    probe = rng.normal(size=(batch, hidden))

    def loss():
        h, _ = lstm_forward(params, xs, lengths)
        return float(np.sum(h * probe))

    h, cache = lstm_forward(params, xs, lengths)
    grads, dxs = lstm_backward(params, cache, probe)

    assert rel_err(grads.wx, fd_gradient(loss, params.wx)) < TOL
    assert rel_err(grads.wh, fd_gradient(loss, params.wh)) < TOL
    assert rel_err(grads.b, fd_gradient(loss, params.b)) < TOL
    assert rel_err(dxs, fd_gradient(loss, xs)) < TOL


@pytest.mark.parametrize("seed", range(N_SEEDS))
def test_mlp_gradients_eval_mode(seed):
    rng = np.random.default_rng(1000 + seed)
    batch = int(rng.integers(1, 4))
    dim = int(rng.integers(2, 9))
    sizes = [int(rng.integers(2, 9)) for _ in range(int(rng.integers(1, 3)))]
    params = MlpParams.init(dim, sizes, rng, dropout=0.0)
    jitter_biases(params, rng)
    x = rng.normal(size=(batch, dim))
    probe = rng.normal(size=batch)

    def loss():
        p, _ = mlp_forward(params, x, mode="eval")
        return float(np.sum(np.atleast_1d(p) * probe))

    p, cache = mlp_forward(params, x, mode="eval")
    grads, dx = mlp_backward(params, cache, probe)

    for (dw, db), (w, b) in zip(grads.layers, params.layers):
        assert rel_err(dw, fd_gradient(loss, w)) < TOL
        assert rel_err(db, fd_gradient(loss, b)) < TOL
    assert rel_err(dx, fd_gradient(loss, x)) < TOL


def test_mlp_gradients_with_fixed_dropout_mask():
    rng = np.random.default_rng(55)
    params = MlpParams.init(5, [6], rng, dropout=0.5)
    jitter_biases(params, rng)
    x = rng.normal(size=(3, 5))
    probe = rng.normal(size=3)

    def run(mode_rng):
        return mlp_forward(params, x, mode="train", rng=mode_rng)

    def loss():
        p, _ = run(np.random.default_rng(123))  # same mask on every call
        return float(np.sum(np.atleast_1d(p) * probe))

    p, cache = run(np.random.default_rng(123))
    grads, dx = mlp_backward(params, cache, probe)
    for (dw, db), (w, b) in zip(grads.layers, params.layers):
        assert rel_err(dw, fd_gradient(loss, w)) < TOL
    assert rel_err(dx, fd_gradient(loss, x)) < TOL


@pytest.mark.parametrize("seed", range(N_SEEDS))
def test_embedding_gradients(seed):
    rng = np.random.default_rng(2000 + seed)
    vocab, dim = int(rng.integers(3, 9)), int(rng.integers(2, 9))
    batch, steps = int(rng.integers(1, 4)), int(rng.integers(1, 5))
    table = rng.normal(size=(vocab, dim))
    table[0] = 0.0
    ids = rng.integers(0, vocab, size=(batch, steps))
    probe = rng.normal(size=(batch, steps, dim))

    def loss():
        return float(np.sum(embedding_forward(table, ids) * probe))

    dtable = embedding_backward(table.shape, ids, probe)
    numeric = fd_gradient(loss, table)
    numeric[0] = 0.0  # pad row is frozen by contract
    assert rel_err(dtable, numeric) < TOL
    assert np.all(dtable[0] == 0.0)


def test_bce_gradient_against_fd():
    rng = np.random.default_rng(9)
    worst = 0.0
    for _ in range(100):
        p = np.array([float(rng.uniform(0.05, 0.95))])
        y = float(rng.integers(0, 2))

        def loss():
            val, _ = bce_loss(p, [y])
            return float(val[0])

        _, dp = bce_loss(p, [y])
        numeric = fd_gradient(loss, p, eps=1e-7)
        worst = max(worst, rel_err(dp, numeric))
    assert worst < 1e-6


def test_bce_values():
    loss, _ = bce_loss([0.5, 0.5], [0.0, 1.0])
    assert np.allclose(loss, np.log(2.0))
    loss_hit, _ = bce_loss([1.0 - 1e-9, 1e-9], [1.0, 0.0])
    assert np.all(loss_hit < 1e-6)


def test_end_to_end_text_path_gradient():
    # embedding -> LSTM -> MLP -> BCE, checked on the embedding table
    rng = np.random.default_rng(77)
    vocab, dim, hidden = 6, 4, 5
    table = rng.normal(size=(vocab, dim))
    table[0] = 0.0
    lstm = LstmParams.init(dim, hidden, rng)
    mlp = MlpParams.init(hidden, [4], rng, dropout=0.0)
    jitter_biases(mlp, rng)
    ids = np.array([[1, 2, 3, 0], [4, 5, 0, 0]])
    lengths = np.array([3, 2])
    y = np.array([1.0, 0.0])

    def loss():
        xs = embedding_forward(table, ids)
        h, _ = lstm_forward(lstm, xs, lengths)
        p, _ = mlp_forward(mlp, h, mode="eval")
        losses, _ = bce_loss(p, y)
        return float(np.mean(losses))

    xs = embedding_forward(table, ids)
    h, lstm_cache = lstm_forward(lstm, xs, lengths)
    p, mlp_cache = mlp_forward(mlp, h, mode="eval")
    _, dp = bce_loss(p, y)
    _, dh = mlp_backward(mlp, mlp_cache, dp / len(y))
    _, dxs = lstm_backward(lstm, lstm_cache, dh)
    dtable = embedding_backward(table.shape, ids, dxs)

    numeric = fd_gradient(loss, table)
    numeric[0] = 0.0
    assert rel_err(dtable, numeric) < TOL


class TestLstmForwardBehavior:
    def test_zero_params_zero_output(self):
        params = LstmParams(wx=np.zeros((8, 3)), wh=np.zeros((8, 2)), b=np.zeros(8))
        h, _ = lstm_forward(params, np.ones((1, 4, 3)))
        assert np.allclose(h, 0.0)

    def test_sequence_length_matters(self):
        rng = np.random.default_rng(3)
        params = LstmParams.init(3, 4, rng)
        x = rng.normal(size=3)
        h1, _ = lstm_forward(params, np.array([[x]]))
        h2, _ = lstm_forward(params, np.array([[x, x]]))
        assert not np.allclose(h1, h2)

    def test_empty_sequence(self):
        from visact.errors import EmptySequence

        params = LstmParams.init(3, 4, np.random.default_rng(0))
        with pytest.raises(EmptySequence):
            lstm_forward(params, np.zeros((1, 0, 3)))

    def test_dim_mismatch(self):
        from visact.errors import DimMismatch

        params = LstmParams.init(3, 4, np.random.default_rng(0))
        with pytest.raises(DimMismatch):
            lstm_forward(params, np.zeros((1, 2, 5)))

    def test_padding_beyond_length_ignored(self):
        rng = np.random.default_rng(8)
        params = LstmParams.init(3, 4, rng)
        xs = rng.normal(size=(1, 2, 3))
        padded = np.concatenate([xs, np.zeros((1, 3, 3))], axis=1)
        h_short, _ = lstm_forward(params, xs, np.array([2]))
        h_padded, _ = lstm_forward(params, padded, np.array([2]))
        assert np.array_equal(h_short, h_padded)


class TestMlpForwardBehavior:
    def test_dropout_zero_train_equals_eval(self):
        rng = np.random.default_rng(4)
        params = MlpParams.init(3, [5], rng, dropout=0.0)
        x = rng.normal(size=(2, 3))
        p_train, _ = mlp_forward(params, x, mode="train", rng=np.random.default_rng(0))
        p_eval, _ = mlp_forward(params, x, mode="eval")
        assert np.array_equal(p_train, p_eval)

    def test_zero_weights_give_half(self):
        params = MlpParams(layers=[(np.zeros((4, 3)), np.zeros(4)), (np.zeros((1, 4)), np.zeros(1))])
        p, _ = mlp_forward(params, np.ones(3))
        assert p == pytest.approx(0.5)

    def test_dropout_expectation_matches_eval(self):
        # single hidden layer: the dropout mask feeds a linear output layer,
        # so the train-mode pre-sigmoid expectation equals the eval logit
        rng = np.random.default_rng(6)
        params = MlpParams.init(4, [8], rng, dropout=0.5)
        x = rng.normal(size=4)
        p_eval, _ = mlp_forward(params, x, mode="eval")
        eval_logit = float(np.log(p_eval / (1.0 - p_eval)))
        mask_rng = np.random.default_rng(42)
        draws = np.empty(100_000)
        for i in range(draws.size):
            p, _ = mlp_forward(params, x, mode="train", rng=mask_rng)
            draws[i] = np.log(p / (1.0 - p))
        assert abs(draws.mean() - eval_logit) <= 0.01 * max(1.0, abs(eval_logit))


class TestRmsprop:
    def test_zero_gradient_no_move(self):
        p = np.array([1.0, -2.0])
        p2, s = rmsprop_step(p, np.zeros(2), None, lr=0.1, rho=0.9, eps=1e-8)
        assert np.array_equal(p, p2)

    def test_hand_computed_step(self):
        # theta=1, f=theta^2 -> g=2; s=0.1*4=0.4; theta' = 1 - 0.1*2/sqrt(0.4+1e-8)
        p, s = rmsprop_step(np.array([1.0]), np.array([2.0]), None, lr=0.1, rho=0.9, eps=1e-8)
        assert p[0] == pytest.approx(0.683772, abs=1e-5)
        assert s[0] == pytest.approx(0.4)

    def test_quadratic_converges(self):
        theta = np.array([1.0])
        state = None
        for _ in range(200):
            grad = 2.0 * theta
            theta, state = rmsprop_step(theta, grad, state, lr=0.01, rho=0.9, eps=1e-8)
        assert abs(theta[0]) < 1e-2

"""Network primitives with hand-derived backward passes.

Everything runs in float64 so analytic gradients can be checked against
central finite differences to tight tolerances. Batches are padded to the
longest sequence; a per-example length mask keeps padded steps from ever
touching the recurrent state, which also makes the gradients exactly
padding-invariant.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import DimMismatch, EmptySequence


def sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def glorot_uniform(rows: int, cols: int, fan_in: int, fan_out: int, rng) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(rows, cols))


# -- LSTM --------------------------------------------------------------------

@dataclass
class LstmParams:
    """Gate-stacked weights, order [input, forget, output, candidate]."""

    wx: np.ndarray  # (4H, D)
    wh: np.ndarray  # (4H, H)
    b: np.ndarray   # (4H,)

    @property
    def hidden_dim(self) -> int:
        return self.wh.shape[1]

    @property
    def input_dim(self) -> int:
        return self.wx.shape[1]

    @classmethod
    def init(cls, input_dim: int, hidden_dim: int, rng) -> "LstmParams":
        """Glorot-uniform per gate block; forget-gate bias starts at 1."""
        h = hidden_dim
        wx = np.vstack([
            glorot_uniform(h, input_dim, input_dim, h, rng) for _ in range(4)
        ])
        wh = np.vstack([
            glorot_uniform(h, h, h, h, rng) for _ in range(4)
        ])
        b = np.zeros(4 * h)
        b[h : 2 * h] = 1.0
        return cls(wx=wx, wh=wh, b=b)

    def arrays(self) -> list[tuple[str, np.ndarray]]:
        return [("wx", self.wx), ("wh", self.wh), ("b", self.b)]


def lstm_forward(params: LstmParams, xs: np.ndarray, lengths: np.ndarray | None = None):
    """Run the recurrence over a padded batch.

    xs has shape (B, T, D); ``lengths`` marks each example's valid prefix
    (default: all T steps).    Returns the hidden state at each example's
    last valid step plus the cache for the backward pass.
    """
    xs = np.asarray(xs, dtype=np.float64)
    if xs.ndim == 2:
        xs = xs[None, :, :]
    batch, steps, dim = xs.shape
    if dim != params.input_dim:
        raise DimMismatch(f"input dim {dim}, expected {params.input_dim}")
    if lengths is None:
        lengths = np.full(batch, steps, dtype=np.int64)
    lengths = np.asarray(lengths, dtype=np.int64)
    if steps == 0 or int(lengths.max(initial=0)) == 0:
        raise EmptySequence("LSTM needs at least one input step")

    h = params.hidden_dim
    h_t = np.zeros((batch, h))
    c_t = np.zeros((batch, h))
    step_cache = []
    for t in range(steps):
        z = xs[:, t] @ params.wx.T + h_t @ params.wh.T + params.b
        gi = sigmoid(z[:, 0:h])
        gf = sigmoid(z[:, h : 2 * h])
        go = sigmoid(z[:, 2 * h : 3 * h])
        gg = np.tanh(z[:, 3 * h : 4 * h])
        c_new = gf * c_t + gi * gg
        tanh_c = np.tanh(c_new)
        h_new = go * tanh_c
        mask = (t < lengths).astype(np.float64)[:, None]
        step_cache.append((gi, gf, go, gg, c_t, tanh_c, h_t, mask))
        c_t = mask * c_new + (1.0 - mask) * c_t
        h_t = mask * h_new + (1.0 - mask) * h_t
    cache = (xs, step_cache)
    return h_t, cache


def lstm_backward(params: LstmParams, cache, dh_final: np.ndarray):
    """Backpropagate through time from the gradient of the final hidden state.

    Returns (param gradients as an LstmParams, gradient w.r.t. the inputs).
    """
    xs, step_cache = cache
    batch, steps, _ = xs.shape
    h = params.hidden_dim
    dwx = np.zeros_like(params.wx)
    dwh = np.zeros_like(params.wh)
    db = np.zeros_like(params.b)
    dxs = np.zeros_like(xs)
    dh = np.asarray(dh_final, dtype=np.float64).reshape(batch, h)
    dc = np.zeros((batch, h))
    for t in range(steps - 1, -1, -1):
        gi, gf, go, gg, c_prev, tanh_c, h_prev, mask = step_cache[t]
        dh_step = mask * dh
        dc_step = mask * dc
        dh_skip = (1.0 - mask) * dh
        dc_skip = (1.0 - mask) * dc

        dgo = dh_step * tanh_c
        dc_total = dc_step + dh_step * go * (1.0 - tanh_c * tanh_c)
        dgi = dc_total * gg
        dgg = dc_total * gi
        dgf = dc_total * c_prev
        dc_prev = dc_total * gf

        dz = np.concatenate(
            [
                dgi * gi * (1.0 - gi),
                dgf * gf * (1.0 - gf),
                dgo * go * (1.0 - go),
                dgg * (1.0 - gg * gg),
            ],
            axis=1,
        )
        dwx += dz.T @ xs[:, t]
        dwh += dz.T @ h_prev
        db += dz.sum(axis=0)
        dxs[:, t] = dz @ params.wx
        dh = dh_skip + dz @ params.wh
        dc = dc_skip + dc_prev
    return LstmParams(wx=dwx, wh=dwh, b=db), dxs


# -- feed-forward head ----------------------------------------------------------

@dataclass
class MlpParams:
    """Dense layers with ReLU + inverted dropout between them, sigmoid head."""

    layers: list  # [(W (out, in), b (out,)), ...], last layer outputs 1 logit
    dropout: float = 0.5

    def __post_init__(self):
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError(f"dropout rate {self.dropout} outside [0, 1)")

    @classmethod
    def init(cls, input_dim: int, fc_sizes, rng, dropout: float = 0.5) -> "MlpParams":
        dims = [input_dim, *fc_sizes, 1]
        layers = []
        for d_in, d_out in zip(dims, dims[1:]):
            layers.append((glorot_uniform(d_out, d_in, d_in, d_out, rng), np.zeros(d_out)))
        return cls(layers=layers, dropout=dropout)

    def arrays(self) -> list[tuple[str, np.ndarray]]:
        out = []
        for i, (w, b) in enumerate(self.layers):
            out.append((f"w{i}", w))
            out.append((f"b{i}", b))
        return out


def mlp_forward(params: MlpParams, x: np.ndarray, mode: str = "eval", rng=None):
    """Forward pass returning sigmoid probabilities of shape (B,).

    Train mode applies inverted dropout (masks scaled by 1/(1-rate)) after
    each hidden ReLU; eval mode applies none, so the two modes agree in
    expectation.
    """
    x = np.asarray(x, dtype=np.float64)
    squeeze = x.ndim == 1
    if squeeze:
        x = x[None, :]
    if x.shape[1] != params.layers[0][0].shape[1]:
        raise DimMismatch(f"input dim {x.shape[1]}, expected {params.layers[0][0].shape[1]}")
    if mode == "train" and params.dropout > 0.0 and rng is None:
        raise ValueError("train mode with dropout needs an rng")

    h = x
    hidden_cache = []
    for w, b in params.layers[:-1]:
        a = h @ w.T + b
        r = np.maximum(a, 0.0)
        if mode == "train" and params.dropout > 0.0:
            keep = 1.0 - params.dropout
            drop_mask = (rng.random(r.shape) < keep) / keep
        else:
            drop_mask = np.ones_like(r)
        hidden_cache.append((h, a, drop_mask))
        h = r * drop_mask
    w_out, b_out = params.layers[-1]
    logit = (h @ w_out.T + b_out)[:, 0]
    p = sigmoid(logit)
    cache = (hidden_cache, h, p, squeeze)
    return (p[0] if squeeze else p), cache


def mlp_backward(params: MlpParams, cache, dp: np.ndarray):
    """Gradients for every layer plus the gradient w.r.t. the input."""
    hidden_cache, h_last, p, squeeze = cache
    dp = np.atleast_1d(np.asarray(dp, dtype=np.float64))
    dlogit = (dp * p * (1.0 - p))[:, None]
    w_out, _ = params.layers[-1]
    grads = [None] * len(params.layers)
    grads[-1] = (dlogit.T @ h_last, dlogit.sum(axis=0))
    dh = dlogit @ w_out
    for i in range(len(params.layers) - 2, -1, -1):
        h_in, a, drop_mask = hidden_cache[i]
        da = dh * drop_mask * (a > 0.0)
        w, _ = params.layers[i]
        grads[i] = (da.T @ h_in, da.sum(axis=0))
        dh = da @ w
    dx = dh[0] if squeeze else dh
    return MlpParams(layers=grads, dropout=params.dropout), dx


# -- loss and optimizer -----------------------------------------------------------

P_CLAMP = 1e-7


def bce_loss(p, y):
    """Binary cross-entropy per item: (loss, dloss/dp).

    Probabilities are clamped to [1e-7, 1 - 1e-7] before the logs.
    """
    p = np.clip(np.asarray(p, dtype=np.float64), P_CLAMP, 1.0 - P_CLAMP)
    y = np.asarray(y, dtype=np.float64)
    loss = -(y * np.log(p) + (1.0 - y) * np.log1p(-p))
    dp = (p - y) / (p * (1.0 - p))
    return loss, dp


def rmsprop_step(param, grad, state, lr: float, rho: float, eps: float):
    """One RMSprop update; returns (new param, new state).

    state is the running mean of squared gradients (None on first call).
    """
    grad = np.asarray(grad, dtype=np.float64)
    if state is None:
        state = np.zeros_like(grad)
    state = rho * state + (1.0 - rho) * grad * grad
    new_param = param - lr * grad / np.sqrt(state + eps)
    return new_param, state


@dataclass
class RmsProp:
    """Keyed RMSprop states for a set of named parameters."""

    lr: float
    rho: float
    eps: float
    states: dict = field(default_factory=dict)

    def update(self, key: str, param: np.ndarray, grad: np.ndarray) -> np.ndarray:
        new_param, state = rmsprop_step(param, grad, self.states.get(key), self.lr, self.rho, self.eps)
        self.states[key] = state
        return new_param


# -- embedding layer ---------------------------------------------------------------

def embedding_forward(table: np.ndarray, ids: np.ndarray) -> np.ndarray:
    """Row lookup: ids (B, T) -> vectors (B, T, D). Row 0 is the pad row."""
    return table[np.asarray(ids, dtype=np.int64)]


def embedding_backward(table_shape, ids: np.ndarray, dvecs: np.ndarray) -> np.ndarray:
    """Scatter-add vector gradients back onto rows; the pad row stays frozen."""
    dtable = np.zeros(table_shape)
    np.add.at(dtable, np.asarray(ids, dtype=np.int64).ravel(), dvecs.reshape(-1, table_shape[1]))
    dtable[0] = 0.0
    return dtable

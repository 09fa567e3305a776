"""Two-layer LSTM classifier trained with Adam, written on numpy.

Each 2n-wide feature row is reshaped into a sequence of n timesteps with
two channels (amplitude_i, phase_i), so the recurrence walks the
subcarrier axis; a single-timestep flat mode is available as a config
switch. The network is

    LSTM(h1) -> LSTM(h2) -> dropout -> affine -> softmax

with standard sigmoid/tanh gates, read out at the final timestep. The
loss is cross-entropy plus l2 * sum of squared weights (biases exempt).
Inputs are z-score normalised with statistics fitted on the training
set and stored in the model.

Gate layout in the fused matrices is [input, forget, candidate, output].
All randomness (init, shuffling, dropout) comes from one seeded
generator, so identical seeds give identical models.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from ..preprocess import zscore_apply, zscore_fit
from .base import (
    NonFiniteLossError,
    check_width,
    encode_labels,
    resolve_classes,
    sigmoid,
    softmax,
)

WEIGHT_KEYS = ("W1", "U1", "W2", "U2", "Wf")  # l2-regularised parameters
BIAS_KEYS = ("b1", "b2", "bf")


@dataclass
class LstmConfig:
    hidden1: int = 200
    hidden2: int = 100
    dropout: float = 0.5
    input_mode: str = "subcarrier_sequence"  # or "flat" (1 timestep, 2n channels)
    batch_size: int = 150
    max_epochs: int = 50
    initial_lr: float = 1e-3
    lr_drop_period: int = 2
    lr_drop_factor: float = 0.1
    l2: float = 5e-4
    beta1: float = 0.9
    beta2: float = 0.9  # the squared-gradient decay factor
    adam_eps: float = 1e-8
    seed: int = 0
    early_stop_train_acc: Optional[float] = None

    def __post_init__(self):
        if self.input_mode not in ("subcarrier_sequence", "flat"):
            raise ValueError("input_mode must be 'subcarrier_sequence' or 'flat'")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must be in [0, 1)")


@dataclass(eq=False)
class LstmModel:
    classes: tuple
    n_features: int
    cfg: LstmConfig
    params: dict
    norm_mean: np.ndarray
    norm_std: np.ndarray
    epochs_run: int = 0


def _orthogonal(rng: np.random.Generator, size: int) -> np.ndarray:
    a = rng.normal(size=(size, size))
    q, r = np.linalg.qr(a)
    return q * np.sign(np.diag(r))  # fix signs so the draw is well defined


def init_params(rng: np.random.Generator, d_in: int, h1: int, h2: int, k: int) -> dict:
    """Glorot-uniform input kernels, per-gate orthogonal recurrent kernels,
    zero biases except forget-gate bias 1."""

    def glorot(fan_in, fan_out):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        return rng.uniform(-limit, limit, size=(fan_in, fan_out))

    def recurrent(h):
        return np.concatenate([_orthogonal(rng, h) for _ in range(4)], axis=1)

    def bias(h):
        b = np.zeros(4 * h)
        b[h : 2 * h] = 1.0  # forget gate
        return b

    return {
        "W1": glorot(d_in, 4 * h1),
        "U1": recurrent(h1),
        "b1": bias(h1),
        "W2": glorot(h1, 4 * h2),
        "U2": recurrent(h2),
        "b2": bias(h2),
        "Wf": glorot(h2, k),
        "bf": np.zeros(k),
    }


def reshape_sequences(X: np.ndarray, mode: str) -> np.ndarray:
    """(n, 2m) feature rows -> (n, T, D) sequences."""
    X = np.asarray(X, dtype=float)
    n, width = X.shape
    if mode == "flat":
        return X.reshape(n, 1, width)
    if width % 2 != 0:
        raise ValueError("subcarrier_sequence mode needs an even feature width")
    m = width // 2
    return np.stack([X[:, :m], X[:, m:]], axis=2)  # (n, m, 2)


def lstm_layer_forward(X_seq: np.ndarray, W, U, b):
    """Run one LSTM layer over a batch of sequences.

    Returns the hidden-state sequence (n, T, H) and the cache needed for
    backpropagation through time.
    """
    n, T, _ = X_seq.shape
    H = U.shape[0]
    h = np.zeros((n, H))
    c = np.zeros((n, H))
    hs = np.zeros((n, T, H))
    cache = {
        "i": np.zeros((n, T, H)),
        "f": np.zeros((n, T, H)),
        "g": np.zeros((n, T, H)),
        "o": np.zeros((n, T, H)),
        "c": np.zeros((n, T, H)),
        "tanh_c": np.zeros((n, T, H)),
        "h_prev": np.zeros((n, T, H)),
        "c_prev": np.zeros((n, T, H)),
        "x": X_seq,
    }
    for t in range(T):
        z = X_seq[:, t] @ W + h @ U + b
        i = sigmoid(z[:, :H])
        f = sigmoid(z[:, H : 2 * H])
        g = np.tanh(z[:, 2 * H : 3 * H])
        o = sigmoid(z[:, 3 * H :])
        cache["h_prev"][:, t] = h
        cache["c_prev"][:, t] = c
        c = f * c + i * g
        tanh_c = np.tanh(c)
        h = o * tanh_c
        cache["i"][:, t] = i
        cache["f"][:, t] = f
        cache["g"][:, t] = g
        cache["o"][:, t] = o
        cache["c"][:, t] = c
        cache["tanh_c"][:, t] = tanh_c
        hs[:, t] = h
    return hs, cache


def lstm_layer_backward(dH_seq: np.ndarray, cache: dict, W, U):
    """BPTT for one layer. Takes dLoss/dH per timestep, returns
    (dX_seq, dW, dU, db)."""
    X_seq = cache["x"]
    n, T, _ = X_seq.shape
    H = U.shape[0]
    dW = np.zeros_like(W)
    dU = np.zeros_like(U)
    db = np.zeros(4 * H)
    dX = np.zeros_like(X_seq)
    dh_next = np.zeros((n, H))
    dc_next = np.zeros((n, H))
    for t in range(T - 1, -1, -1):
        i = cache["i"][:, t]
        f = cache["f"][:, t]
        g = cache["g"][:, t]
        o = cache["o"][:, t]
        tanh_c = cache["tanh_c"][:, t]
        dh = dH_seq[:, t] + dh_next
        do = dh * tanh_c
        dc = dh * o * (1.0 - tanh_c**2) + dc_next
        di = dc * g
        dg = dc * i
        df = dc * cache["c_prev"][:, t]
        dc_next = dc * f
        dz = np.concatenate(
            [
                di * i * (1.0 - i),
                df * f * (1.0 - f),
                dg * (1.0 - g**2),
                do * o * (1.0 - o),
            ],
            axis=1,
        )
        dW += X_seq[:, t].T @ dz
        dU += cache["h_prev"][:, t].T @ dz
        db += dz.sum(axis=0)
        dX[:, t] = dz @ W.T
        dh_next = dz @ U.T
    return dX, dW, dU, db


def forward(params: dict, X_seq: np.ndarray, dropout_mask: Optional[np.ndarray] = None):
    """Full network forward pass; returns class probabilities and caches."""
    h1_seq, cache1 = lstm_layer_forward(X_seq, params["W1"], params["U1"], params["b1"])
    h2_seq, cache2 = lstm_layer_forward(h1_seq, params["W2"], params["U2"], params["b2"])
    h_last = h2_seq[:, -1]
    if dropout_mask is not None:
        h_last = h_last * dropout_mask
    logits = h_last @ params["Wf"] + params["bf"]
    probs = softmax(logits)
    return probs, (cache1, cache2, h_last)


def loss_and_grads(
    params: dict,
    X_seq: np.ndarray,
    targets: np.ndarray,
    l2: float,
    dropout_mask: Optional[np.ndarray] = None,
):
    """Cross-entropy + l2 penalty, with gradients for every parameter."""
    n = X_seq.shape[0]
    probs, (cache1, cache2, h_drop) = forward(params, X_seq, dropout_mask)
    nll = -np.log(np.maximum(probs[np.arange(n), targets], 1e-300))
    loss = float(nll.mean())
    for key in WEIGHT_KEYS:
        loss += l2 * float(np.sum(params[key] ** 2))

    dlogits = probs.copy()
    dlogits[np.arange(n), targets] -= 1.0
    dlogits /= n

    grads = {}
    grads["Wf"] = h_drop.T @ dlogits
    grads["bf"] = dlogits.sum(axis=0)
    dh_last = dlogits @ params["Wf"].T
    if dropout_mask is not None:
        dh_last = dh_last * dropout_mask

    T = X_seq.shape[1]
    dH2 = np.zeros((n, T, params["U2"].shape[0]))
    dH2[:, -1] = dh_last
    dH1, grads["W2"], grads["U2"], grads["b2"] = lstm_layer_backward(
        dH2, cache2, params["W2"], params["U2"]
    )
    _, grads["W1"], grads["U1"], grads["b1"] = lstm_layer_backward(
        dH1, cache1, params["W1"], params["U1"]
    )
    for key in WEIGHT_KEYS:
        grads[key] = grads[key] + 2.0 * l2 * params[key]
    return loss, grads


class _Adam:
    def __init__(self, params: dict, beta1: float, beta2: float, eps: float):
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0

    def step(self, params: dict, grads: dict, lr: float):
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        for k in params:
            g = grads[k]
            self.m[k] = b1 * self.m[k] + (1 - b1) * g
            self.v[k] = b2 * self.v[k] + (1 - b2) * g * g
            m_hat = self.m[k] / (1 - b1**self.t)
            v_hat = self.v[k] / (1 - b2**self.t)
            params[k] = params[k] - lr * m_hat / (np.sqrt(v_hat) + self.eps)


def lstm_train(
    X: np.ndarray, y: Sequence, cfg: Optional[LstmConfig] = None, classes=None
) -> LstmModel:
    cfg = cfg if cfg is not None else LstmConfig()
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] != len(y):
        raise ValueError("X must be 2-D with one label per row")
    classes = resolve_classes(y, classes)
    codes = encode_labels(y, classes)
    K = len(classes)

    mean, std = zscore_fit(X)
    Xn = zscore_apply(X, mean, std)
    seqs = reshape_sequences(Xn, cfg.input_mode)
    n, _, d_in = seqs.shape

    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(cfg.seed)))
    params = init_params(rng, d_in, cfg.hidden1, cfg.hidden2, K)
    adam = _Adam(params, cfg.beta1, cfg.beta2, cfg.adam_eps)

    batch_index = 0
    epochs_run = 0
    for epoch in range(cfg.max_epochs):
        lr = cfg.initial_lr * cfg.lr_drop_factor ** (epoch // cfg.lr_drop_period)
        perm = rng.permutation(n)
        for start in range(0, n, cfg.batch_size):
            take = perm[start : start + cfg.batch_size]
            mask = None
            if cfg.dropout > 0.0:
                keep = rng.random((take.size, cfg.hidden2)) >= cfg.dropout
                mask = keep / (1.0 - cfg.dropout)
            loss, grads = loss_and_grads(params, seqs[take], codes[take], cfg.l2, mask)
            if not np.isfinite(loss):
                raise NonFiniteLossError(batch_index)
            adam.step(params, grads, lr)
            batch_index += 1
        epochs_run = epoch + 1
        if cfg.early_stop_train_acc is not None:
            probs, _ = forward(params, seqs)
            acc = float(np.mean(np.argmax(probs, axis=1) == codes))
            if acc >= cfg.early_stop_train_acc:
                break

    return LstmModel(
        classes=classes,
        n_features=int(X.shape[1]),
        cfg=cfg,
        params=params,
        norm_mean=mean,
        norm_std=std,
        epochs_run=epochs_run,
    )


def lstm_scores(model: LstmModel, Q: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic inference: dropout disabled, stored normalisation."""
    Q = check_width(model.n_features, Q)
    Qn = zscore_apply(Q, model.norm_mean, model.norm_std)
    seqs = reshape_sequences(Qn, model.cfg.input_mode)
    probs, _ = forward(model.params, seqs)
    return np.argmax(probs, axis=1), probs

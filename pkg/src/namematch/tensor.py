"""Minimal neural primitives with exact analytic gradients.

Everything is float64 numpy: embedding lookup, a standard LSTM (gate
order input, forget, cell, output), dense layers, batch normalization,
inverted dropout, sigmoid + binary cross-entropy, and the Nadam
optimizer.  Forward passes return caches consumed by the matching
backward passes; gradients accumulate into a dict mirroring the
parameter store.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class ArchConfig:
    """Architecture shapes and layer hyperparameters."""

    alphabet_size: int = 63
    embed_dim: int = 63
    seq_len: int = 300
    lstm_units: int = 16
    dense1_units: int = 32
    dense2_units: int = 16
    dropout: float = 0.2
    bn_momentum: float = 0.99
    bn_eps: float = 1e-3

    @property
    def feature_dim(self) -> int:
        # L1 + L2 + Linf + cosine distance + element-wise |diff|
        return self.lstm_units + 4

    def to_dict(self) -> dict:
        return dict(self.__dict__)

    @classmethod
    def from_dict(cls, d: dict) -> "ArchConfig":
        return cls(**d)


def _glorot(rng, fan_in, fan_out):
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


def _orthogonal(rng, rows, cols):
    a = rng.standard_normal((max(rows, cols), min(rows, cols)))
    q, r = np.linalg.qr(a)
    q *= np.sign(np.diag(r))
    if rows < cols:
        q = q.T
    return np.ascontiguousarray(q[:rows, :cols])


class ParamStore:
    """Named parameter arrays for the full Siamese model."""

    RUNNING = ("bn1_mean", "bn1_var", "bn2_mean", "bn2_var")

    def __init__(self, arch: ArchConfig, arrays: dict):
        self.arch = arch
        self.arrays = arrays

    @classmethod
    def init(cls, arch: ArchConfig, seed: int = 0) -> "ParamStore":
        rng = np.random.default_rng(seed)
        h, d = arch.lstm_units, arch.embed_dim
        f, d1, d2 = arch.feature_dim, arch.dense1_units, arch.dense2_units
        lstm_b = np.zeros(4 * h)
        lstm_b[h:2 * h] = 1.0  # forget-gate bias init
        arrays = {
            "embedding": rng.uniform(-0.05, 0.05, size=(arch.alphabet_size, d)),
            "lstm_W": _glorot(rng, d, 4 * h),
            "lstm_U": _orthogonal(rng, h, 4 * h),
            "lstm_b": lstm_b,
            "dense1_W": _glorot(rng, f, d1),
            "dense1_b": np.zeros(d1),
            "bn1_gamma": np.ones(d1),
            "bn1_beta": np.zeros(d1),
            "bn1_mean": np.zeros(d1),
            "bn1_var": np.ones(d1),
            "dense2_W": _glorot(rng, d1, d2),
            "dense2_b": np.zeros(d2),
            "bn2_gamma": np.ones(d2),
            "bn2_beta": np.zeros(d2),
            "bn2_mean": np.zeros(d2),
            "bn2_var": np.ones(d2),
            "dense3_W": _glorot(rng, d2, 1),
            "dense3_b": np.zeros(1),
        }
        return cls(arch, arrays)

    def __getitem__(self, name: str) -> np.ndarray:
        return self.arrays[name]

    def trainable_names(self) -> list:
        return [n for n in self.arrays if n not in self.RUNNING]

    def zero_grads(self) -> dict:
        return {n: np.zeros_like(self.arrays[n]) for n in self.trainable_names()}

    def copy(self) -> "ParamStore":
        return ParamStore(self.arch, {n: a.copy() for n, a in self.arrays.items()})


def sigmoid(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


# ---------------------------------------------------------------------------
# LSTM

def lstm_forward(indices: np.ndarray, params: ParamStore):
    """Run embedding lookup + LSTM over the sequence; return final hidden state.

    indices: (batch, seq_len) int array of alphabet indices.  Padding is
    processed like any other symbol.  Returns (h_final, cache).
    """
    W, U, b = params["lstm_W"], params["lstm_U"], params["lstm_b"]
    E = params["embedding"]
    B, T = indices.shape
    H = params.arch.lstm_units

    x = E[indices]  # (B, T, D)
    h = np.zeros((B, H))
    c = np.zeros((B, H))
    steps = []
    for t in range(T):
        z = x[:, t] @ W + h @ U + b
        i = sigmoid(z[:, :H])
        f = sigmoid(z[:, H:2 * H])
        g = np.tanh(z[:, 2 * H:3 * H])
        o = sigmoid(z[:, 3 * H:])
        c_prev = c
        c = f * c_prev + i * g
        tanh_c = np.tanh(c)
        h_prev = h
        h = o * tanh_c
        steps.append((i, f, g, o, c_prev, tanh_c, h_prev))
    cache = {"indices": indices, "x": x, "steps": steps}
    return h, cache


def lstm_backward(dh: np.ndarray, cache: dict, params: ParamStore, grads: dict):
    """Backprop through time from the gradient of the final hidden state."""
    W, U = params["lstm_W"], params["lstm_U"]
    indices, x, steps = cache["indices"], cache["x"], cache["steps"]
    B, T = indices.shape
    H = params.arch.lstm_units

    dh = dh.copy()
    dc = np.zeros_like(dh)
    dx = np.zeros_like(x)
    dW = np.zeros_like(W)
    dU = np.zeros_like(U)
    db = np.zeros_like(params["lstm_b"])

    for t in range(T - 1, -1, -1):
        i, f, g, o, c_prev, tanh_c, h_prev = steps[t]
        do = dh * tanh_c
        dc = dc + dh * o * (1.0 - tanh_c ** 2)
        di = dc * g
        df = dc * c_prev
        dg = dc * i
        dc = dc * f

        dz = np.concatenate(
            [
                di * i * (1.0 - i),
                df * f * (1.0 - f),
                dg * (1.0 - g ** 2),
                do * o * (1.0 - o),
            ],
            axis=1,
        )
        dW += x[:, t].T @ dz
        dU += h_prev.T @ dz
        db += dz.sum(axis=0)
        dx[:, t] = dz @ W.T
        dh = dz @ U.T

    grads["lstm_W"] += dW
    grads["lstm_U"] += dU
    grads["lstm_b"] += db
    flat = dx.reshape(B * T, -1)
    np.add.at(grads["embedding"], indices.reshape(-1), flat)


# ---------------------------------------------------------------------------
# Dense / batch norm / dropout head

def _bn_forward(x, gamma, beta, running_mean, running_var, eps, momentum, training):
    if training:
        mean = x.mean(axis=0)
        var = x.var(axis=0)
        running_mean *= momentum
        running_mean += (1.0 - momentum) * mean
        running_var *= momentum
        running_var += (1.0 - momentum) * var
    else:
        mean, var = running_mean, running_var
    inv_std = 1.0 / np.sqrt(var + eps)
    x_hat = (x - mean) * inv_std
    out = gamma * x_hat + beta
    cache = (x_hat, inv_std, gamma, training)
    return out, cache


def _bn_backward(dout, cache):
    x_hat, inv_std, gamma, training = cache
    dgamma = (dout * x_hat).sum(axis=0)
    dbeta = dout.sum(axis=0)
    dx_hat = dout * gamma
    if training:
        n = dout.shape[0]
        dx = (inv_std / n) * (
            n * dx_hat - dx_hat.sum(axis=0) - x_hat * (dx_hat * x_hat).sum(axis=0)
        )
    else:
        dx = dx_hat * inv_std
    return dx, dgamma, dbeta


def head_forward(features: np.ndarray, params: ParamStore, training: bool,
                 dropout_rng: np.random.Generator = None):
    """Classification head: two dense+ReLU+BN+dropout blocks, then sigmoid.

    Returns (yhat, cache).  Dropout is active only when training and the
    configured rate is > 0; batch norm uses batch statistics when
    training, running statistics otherwise.
    """
    arch = params.arch
    cache = {"training": training, "input": features}
    a = features

    for block in (1, 2):
        W, b = params[f"dense{block}_W"], params[f"dense{block}_b"]
        z = a @ W + b
        relu = np.maximum(z, 0.0)
        bn_out, bn_cache = _bn_forward(
            relu,
            params[f"bn{block}_gamma"],
            params[f"bn{block}_beta"],
            params[f"bn{block}_mean"],
            params[f"bn{block}_var"],
            arch.bn_eps,
            arch.bn_momentum,
            training,
        )
        if training and arch.dropout > 0.0:
            if dropout_rng is None:
                raise ValueError("training with dropout requires a dropout_rng")
            mask = (dropout_rng.random(bn_out.shape) >= arch.dropout) / (1.0 - arch.dropout)
        else:
            mask = None
        out = bn_out * mask if mask is not None else bn_out
        cache[f"block{block}"] = (a, z, relu, bn_cache, mask)
        a = out

    z3 = (a @ params["dense3_W"] + params["dense3_b"]).ravel()
    yhat = sigmoid(z3)
    cache["final"] = (a, z3)
    cache["yhat"] = yhat
    return yhat, cache


def head_backward(dz3: np.ndarray, cache: dict, params: ParamStore, grads: dict) -> np.ndarray:
    """Backprop from the logit gradient dL/dz3; returns dL/d(features)."""
    a_final, _ = cache["final"]
    dz3 = dz3.reshape(-1, 1)
    grads["dense3_W"] += a_final.T @ dz3
    grads["dense3_b"] += dz3.sum(axis=0)
    da = dz3 @ params["dense3_W"].T

    for block in (2, 1):
        a_in, z, relu, bn_cache, mask = cache[f"block{block}"]
        if mask is not None:
            da = da * mask
        da, dgamma, dbeta = _bn_backward(da, bn_cache)
        grads[f"bn{block}_gamma"] += dgamma
        grads[f"bn{block}_beta"] += dbeta
        dz = da * (z > 0.0)
        grads[f"dense{block}_W"] += a_in.T @ dz
        grads[f"dense{block}_b"] += dz.sum(axis=0)
        da = dz @ params[f"dense{block}_W"].T
    return da


# ---------------------------------------------------------------------------
# Loss

YHAT_CLAMP = 1e-7


def bce_loss(yhat: np.ndarray, y: np.ndarray):
    """Mean binary cross-entropy and the gradient dL/d(logit).

    yhat must come from a sigmoid; the returned gradient is with respect
    to the pre-sigmoid logit (the numerically stable fused form).
    """
    yhat = np.asarray(yhat, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    clamped = np.clip(yhat, YHAT_CLAMP, 1.0 - YHAT_CLAMP)
    loss = float(-np.mean(y * np.log(clamped) + (1.0 - y) * np.log(1.0 - clamped)))
    if not np.isfinite(loss):
        raise FloatingPointError("binary cross-entropy diverged")
    dz = (yhat - y) / y.size
    return loss, dz


# ---------------------------------------------------------------------------
# Nadam

@dataclass
class NadamState:
    """Nesterov-Adam state: per-parameter moments and the step counter."""

    lr: float = 1e-4
    beta1: float = 0.8
    beta2: float = 0.9
    eps: float = 1e-7
    step_count: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def nadam_step(params: ParamStore, grads: dict, state: NadamState):
    """One Nadam update in place over all trainable parameters."""
    state.step_count += 1
    t = state.step_count
    b1, b2 = state.beta1, state.beta2
    for name in params.trainable_names():
        g = grads[name]
        if name not in state.m:
            state.m[name] = np.zeros_like(g)
            state.v[name] = np.zeros_like(g)
        m, v = state.m[name], state.v[name]
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        m_bar = b1 * m / (1.0 - b1 ** (t + 1)) + (1.0 - b1) * g / (1.0 - b1 ** t)
        v_hat = v / (1.0 - b2 ** t)
        params.arrays[name] -= state.lr * m_bar / (np.sqrt(v_hat) + state.eps)

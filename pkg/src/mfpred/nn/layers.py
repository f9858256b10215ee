"""Trainable layer primitives built on the tensor tape.

Parameters live in a ParameterStore and are addressed by name. Weight
matrices are initialised uniformly in +-1/sqrt(fan_in); biases start at
zero except the LSTM forget gate, which starts at one.
"""

from __future__ import annotations

import numpy as np

from .tensor import Tensor, add, concat, leaky_relu, matmul, mul, narrow, sigmoid, tanh


def uniform_init(rng: np.random.Generator, shape: tuple[int, ...], fan_in: int) -> np.ndarray:
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)


def fully_connected(x: Tensor, w: Tensor, b: Tensor | None = None) -> Tensor:
    """Affine map x @ w + b for (B, n_in) inputs."""
    if x.data.shape[-1] != w.data.shape[0]:
        raise ValueError(f"fully_connected shape mismatch: input {x.data.shape} vs weights {w.data.shape}")
    out = matmul(x, w)
    if b is not None:
        out = add(out, b)
    return out


def init_fc(store, name: str, n_in: int, n_out: int, rng: np.random.Generator):
    store.add(f"{name}.w", uniform_init(rng, (n_in, n_out), n_in))
    store.add(f"{name}.b", np.zeros(n_out))


def init_lstm(store, name: str, n_in: int, n_hidden: int, rng: np.random.Generator):
    """Gate order along the last axis: input, forget, candidate, output."""
    store.add(f"{name}.w_ih", uniform_init(rng, (n_in, 4 * n_hidden), n_in))
    store.add(f"{name}.w_hh", uniform_init(rng, (n_hidden, 4 * n_hidden), n_hidden))
    b = np.zeros(4 * n_hidden)
    b[n_hidden : 2 * n_hidden] = 1.0
    store.add(f"{name}.b", b)


def lstm_cell(x: Tensor, h: Tensor, c: Tensor, store, name: str, extra_gates: Tensor | None = None):
    """One gated LSTM update; returns (h', c').

    ``extra_gates`` is an optional additive pre-activation contribution of
    shape (B, 4H), used when a cell receives a second input stream through
    its own weight block.
    """
    w_ih = store[f"{name}.w_ih"]
    w_hh = store[f"{name}.w_hh"]
    b = store[f"{name}.b"]
    if x.data.shape[-1] != w_ih.data.shape[0]:
        raise ValueError(
            f"lstm_cell input size {x.data.shape[-1]} does not match weights {w_ih.data.shape[0]}"
        )
    nh = w_hh.data.shape[0]
    gates = add(add(matmul(x, w_ih), matmul(h, w_hh)), b)
    if extra_gates is not None:
        gates = add(gates, extra_gates)
    i = sigmoid(narrow(gates, 1, 0, nh))
    f = sigmoid(narrow(gates, 1, nh, nh))
    g = tanh(narrow(gates, 1, 2 * nh, nh))
    o = sigmoid(narrow(gates, 1, 3 * nh, nh))
    c_new = add(mul(f, c), mul(i, g))
    h_new = mul(o, tanh(c_new))
    return h_new, c_new


def lstm_encode(seq: np.ndarray, mask: np.ndarray | None, store, name: str,
                embed_name: str | None = None, alpha: float = 0.1) -> Tensor:
    """Run an LSTM over a (B, T, D) batch and return the final hidden state.

    ``mask`` is a (B, T) 0/1 array marking valid steps (left-padded tracks
    keep zero state until their first valid step). When ``embed_name`` is
    given each step passes through a leaky-ReLU embedding layer first.
    """
    bsz, steps, _ = seq.shape
    nh = store[f"{name}.w_hh"].data.shape[0]
    h = Tensor(np.zeros((bsz, nh)))
    c = Tensor(np.zeros((bsz, nh)))
    for t in range(steps):
        xt = Tensor(seq[:, t, :])
        if embed_name is not None:
            xt = leaky_relu(fully_connected(xt, store[f"{embed_name}.w"], store[f"{embed_name}.b"]), alpha)
        h_new, c_new = lstm_cell(xt, h, c, store, name)
        if mask is None or mask[:, t].all():
            h, c = h_new, c_new
        else:
            m = Tensor(mask[:, t : t + 1])
            keep = Tensor(1.0 - mask[:, t : t + 1])
            h = add(mul(m, h_new), mul(keep, h))
            c = add(mul(m, c_new), mul(keep, c))
    return h


def one_hot(indices: np.ndarray, num_classes: int) -> np.ndarray:
    out = np.zeros((len(indices), num_classes))
    out[np.arange(len(indices)), np.asarray(indices, dtype=np.intp)] = 1.0
    return out


__all__ = [
    "fully_connected",
    "lstm_cell",
    "lstm_encode",
    "init_fc",
    "init_lstm",
    "uniform_init",
    "one_hot",
    "concat",
]

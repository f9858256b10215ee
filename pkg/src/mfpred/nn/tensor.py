"""Reverse-mode automatic differentiation over a fixed set of numpy ops.

Everything is float64 and batch-first. A ``Tensor`` wraps an ndarray plus an
optional backward closure; calling ``backward()`` on a scalar loss runs the
tape in reverse topological order and accumulates gradients on every tensor
that ``requires_grad``. Only the ops defined here are differentiable; there
is deliberately no general autodiff beyond them.
"""

from __future__ import annotations

import contextlib

import numpy as np

_GRAD_ENABLED = True


@contextlib.contextmanager
def no_grad():
    """Disable tape construction inside the block (inference fast path)."""
    global _GRAD_ENABLED
    prev = _GRAD_ENABLED
    _GRAD_ENABLED = False
    try:
        yield
    finally:
        _GRAD_ENABLED = prev


def grad_enabled() -> bool:
    return _GRAD_ENABLED


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = None
        self.requires_grad = bool(requires_grad)
        self._parents: tuple[Tensor, ...] = ()
        self._backward = None

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"

    def item(self) -> float:
        return float(self.data)

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    def zero_grad(self):
        self.grad = None

    def backward(self):
        if self.data.size != 1:
            raise ValueError("backward() requires a scalar tensor")
        topo: list[Tensor] = []
        visited: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, processed = stack.pop()
            if processed:
                topo.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if id(p) not in visited:
                    stack.append((p, False))
        self.grad = np.ones_like(self.data)
        for node in reversed(topo):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)

    # operator sugar; scalars and ndarrays are lifted to constant tensors
    def __add__(self, other):
        return add(self, _lift(other))

    def __radd__(self, other):
        return add(_lift(other), self)

    def __sub__(self, other):
        return sub(self, _lift(other))

    def __rsub__(self, other):
        return sub(_lift(other), self)

    def __mul__(self, other):
        return mul(self, _lift(other))

    def __rmul__(self, other):
        return mul(_lift(other), self)

    def __truediv__(self, other):
        return div(self, _lift(other))

    def __rtruediv__(self, other):
        return div(_lift(other), self)

    def __neg__(self):
        return mul(self, _lift(-1.0))

    def __matmul__(self, other):
        return matmul(self, other)


def _lift(value) -> Tensor:
    return value if isinstance(value, Tensor) else Tensor(value)


def _make(data, parents, backward):
    out = Tensor(data)
    if _GRAD_ENABLED and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = tuple(parents)
        out._backward = backward
    return out


def _accum(t: Tensor, g: np.ndarray):
    if not t.requires_grad:
        return
    if t.grad is None:
        t.grad = np.zeros_like(t.data)
    t.grad += g


def _unbroadcast(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Reduce a broadcast gradient back to the original operand shape."""
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for ax, n in enumerate(shape):
        if n == 1 and g.shape[ax] != 1:
            g = g.sum(axis=ax, keepdims=True)
    return g.reshape(shape)


def add(a: Tensor, b: Tensor) -> Tensor:
    data = a.data + b.data

    def backward(g):
        _accum(a, _unbroadcast(g, a.data.shape))
        _accum(b, _unbroadcast(g, b.data.shape))

    return _make(data, (a, b), backward)


def sub(a: Tensor, b: Tensor) -> Tensor:
    data = a.data - b.data

    def backward(g):
        _accum(a, _unbroadcast(g, a.data.shape))
        _accum(b, _unbroadcast(-g, b.data.shape))

    return _make(data, (a, b), backward)


def mul(a: Tensor, b: Tensor) -> Tensor:
    data = a.data * b.data

    def backward(g):
        _accum(a, _unbroadcast(g * b.data, a.data.shape))
        _accum(b, _unbroadcast(g * a.data, b.data.shape))

    return _make(data, (a, b), backward)


def div(a: Tensor, b: Tensor) -> Tensor:
    data = a.data / b.data

    def backward(g):
        _accum(a, _unbroadcast(g / b.data, a.data.shape))
        _accum(b, _unbroadcast(-g * a.data / (b.data * b.data), b.data.shape))

    return _make(data, (a, b), backward)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.data.ndim != 2 or b.data.ndim != 2:
        raise ValueError(f"matmul expects 2-D operands, got {a.data.shape} @ {b.data.shape}")
    if a.data.shape[1] != b.data.shape[0]:
        raise ValueError(f"matmul shape mismatch: {a.data.shape} @ {b.data.shape}")
    data = a.data @ b.data

    def backward(g):
        _accum(a, g @ b.data.T)
        _accum(b, a.data.T @ g)

    return _make(data, (a, b), backward)


def exp(a: Tensor) -> Tensor:
    data = np.exp(a.data)

    def backward(g):
        _accum(a, g * data)

    return _make(data, (a,), backward)


def log(a: Tensor) -> Tensor:
    data = np.log(a.data)

    def backward(g):
        _accum(a, g / a.data)

    return _make(data, (a,), backward)


def tanh(a: Tensor) -> Tensor:
    data = np.tanh(a.data)

    def backward(g):
        _accum(a, g * (1.0 - data * data))

    return _make(data, (a,), backward)


def sigmoid(a: Tensor) -> Tensor:
    # stable logistic: exp of a non-positive argument on both branches
    x = a.data
    e = np.exp(-np.abs(x))
    data = np.where(x >= 0, 1.0 / (1.0 + e), e / (1.0 + e))

    def backward(g):
        _accum(a, g * data * (1.0 - data))

    return _make(data, (a,), backward)


def leaky_relu(a: Tensor, alpha: float = 0.1) -> Tensor:
    """Elementwise max(x, alpha * x); backward scales by 1 or alpha."""
    mask = a.data >= 0
    data = np.where(mask, a.data, alpha * a.data)

    def backward(g):
        _accum(a, g * np.where(mask, 1.0, alpha))

    return _make(data, (a,), backward)


def tsum(a: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    data = a.data.sum(axis=axis, keepdims=keepdims)

    def backward(g):
        if axis is None:
            _accum(a, np.broadcast_to(g, a.data.shape).copy())
        else:
            gg = g if keepdims else np.expand_dims(g, axis)
            _accum(a, np.broadcast_to(gg, a.data.shape).copy())

    return _make(data, (a,), backward)


def tmean(a: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    n = a.data.size if axis is None else a.data.shape[axis]
    return tsum(a, axis=axis, keepdims=keepdims) * (1.0 / n)


def reshape(a: Tensor, shape) -> Tensor:
    data = a.data.reshape(shape)

    def backward(g):
        _accum(a, g.reshape(a.data.shape))

    return _make(data, (a,), backward)


def concat(tensors, axis: int = -1) -> Tensor:
    tensors = list(tensors)
    data = np.concatenate([t.data for t in tensors], axis=axis)
    sizes = [t.data.shape[axis] for t in tensors]

    def backward(g):
        start = 0
        for t, n in zip(tensors, sizes):
            idx = [slice(None)] * g.ndim
            idx[axis] = slice(start, start + n)
            _accum(t, g[tuple(idx)])
            start += n

    return _make(data, tuple(tensors), backward)


def narrow(a: Tensor, axis: int, start: int, length: int) -> Tensor:
    """Contiguous slice along one axis."""
    idx = [slice(None)] * a.data.ndim
    idx[axis] = slice(start, start + length)
    idx = tuple(idx)
    data = a.data[idx]

    def backward(g):
        if a.requires_grad:
            full = np.zeros_like(a.data)
            full[idx] = g
            _accum(a, full)

    return _make(data, (a,), backward)


def cumsum(a: Tensor, axis: int) -> Tensor:
    data = np.cumsum(a.data, axis=axis)

    def backward(g):
        flipped = np.flip(np.cumsum(np.flip(g, axis=axis), axis=axis), axis=axis)
        _accum(a, flipped)

    return _make(data, (a,), backward)


def repeat_interleave(a: Tensor, repeats: int, axis: int = 0) -> Tensor:
    data = np.repeat(a.data, repeats, axis=axis)

    def backward(g):
        shape = list(a.data.shape)
        shape.insert(axis + 1, repeats)
        _accum(a, g.reshape(shape).sum(axis=axis + 1))

    return _make(data, (a,), backward)


def gather_rows(a: Tensor, idx) -> Tensor:
    """Select rows ``a[idx]``; repeated indices accumulate in backward."""
    idx = np.asarray(idx, dtype=np.intp)
    data = a.data[idx]

    def backward(g):
        if a.requires_grad:
            full = np.zeros_like(a.data)
            np.add.at(full, idx, g)
            _accum(a, full)

    return _make(data, (a,), backward)


def grid_scatter(enc: Tensor, batch_idx, rows, cols, grid_shape) -> Tensor:
    """Scatter per-agent encodings (A, C) into a (B, C, R, S) spatial grid.

    Cell assignments must already be collision-free: at most one source row
    per (batch, row, col) triple.
    """
    batch_idx = np.asarray(batch_idx, dtype=np.intp)
    rows = np.asarray(rows, dtype=np.intp)
    cols = np.asarray(cols, dtype=np.intp)
    b, c, r, s = grid_shape
    if enc.data.ndim != 2 or enc.data.shape[1] != c:
        raise ValueError(f"encodings shape {enc.data.shape} does not match grid channels {c}")
    data = np.zeros((b, c, r, s), dtype=np.float64)
    data[batch_idx, :, rows, cols] = enc.data

    def backward(g):
        _accum(enc, g[batch_idx, :, rows, cols])

    return _make(data, (enc,), backward)


def conv2d(x: Tensor, w: Tensor, b: Tensor | None = None, stride: int = 1) -> Tensor:
    """Valid-mode cross-correlation: (B,Cin,H,W) * (Cout,Cin,kh,kw) -> (B,Cout,H',W')."""
    xb, cin, h, wd = x.data.shape
    cout, cin_w, kh, kw = w.data.shape
    if cin != cin_w:
        raise ValueError(f"conv2d channel mismatch: input {cin} vs kernel {cin_w}")
    if kh > h or kw > wd:
        raise ValueError(f"kernel ({kh},{kw}) larger than input ({h},{wd})")
    windows = np.lib.stride_tricks.sliding_window_view(x.data, (kh, kw), axis=(2, 3))
    windows = windows[:, :, ::stride, ::stride]  # (B, Cin, H', W', kh, kw)
    data = np.einsum("bchwij,ocij->bohw", windows, w.data, optimize=True)
    if b is not None:
        data = data + b.data[None, :, None, None]
    hp, wp = data.shape[2], data.shape[3]

    def backward(g):
        if w.requires_grad:
            _accum(w, np.einsum("bchwij,bohw->ocij", windows, g, optimize=True))
        if b is not None and b.requires_grad:
            _accum(b, g.sum(axis=(0, 2, 3)))
        if x.requires_grad:
            gx = np.zeros_like(x.data)
            for i in range(kh):
                for j in range(kw):
                    patch = np.einsum("bohw,oc->bchw", g, w.data[:, :, i, j], optimize=True)
                    gx[:, :, i : i + hp * stride : stride, j : j + wp * stride : stride] += patch
            _accum(x, gx)

    parents = (x, w) if b is None else (x, w, b)
    return _make(data, parents, backward)


def max_pool2d(x: Tensor, window: tuple[int, int]) -> Tensor:
    """Non-overlapping max pooling; trailing rows/cols that do not fill a
    window are dropped. Argmax positions are recorded for backward routing."""
    ph, pw = window
    xb, c, h, w = x.data.shape
    if ph > h or pw > w:
        raise ValueError(f"pool window ({ph},{pw}) larger than input ({h},{w})")
    hp, wp = h // ph, w // pw
    cropped = x.data[:, :, : hp * ph, : wp * pw]
    tiles = cropped.reshape(xb, c, hp, ph, wp, pw).transpose(0, 1, 2, 4, 3, 5)
    flat = tiles.reshape(xb, c, hp, wp, ph * pw)
    arg = np.argmax(flat, axis=-1)
    data = np.take_along_axis(flat, arg[..., None], axis=-1)[..., 0]

    def backward(g):
        if not x.requires_grad:
            return
        gflat = np.zeros_like(flat)
        np.put_along_axis(gflat, arg[..., None], g[..., None], axis=-1)
        gtiles = gflat.reshape(xb, c, hp, wp, ph, pw).transpose(0, 1, 2, 4, 3, 5)
        gx = np.zeros_like(x.data)
        gx[:, :, : hp * ph, : wp * pw] = gtiles.reshape(xb, c, hp * ph, wp * pw)
        _accum(x, gx)

    return _make(data, (x,), backward)


def softmax_cross_entropy(logits: Tensor, labels) -> Tensor:
    """Mean of -log softmax(logits)[label]; backward is softmax minus one-hot.

    Accepts a single (K,) row with an int label or a (B,K) batch with (B,)
    integer labels.
    """
    x = logits.data
    single = x.ndim == 1
    x2 = x[None, :] if single else x
    lab = np.atleast_1d(np.asarray(labels, dtype=np.intp))
    if lab.shape[0] != x2.shape[0]:
        raise ValueError(f"{lab.shape[0]} labels for {x2.shape[0]} logit rows")
    if np.any(lab < 0) or np.any(lab >= x2.shape[1]):
        raise IndexError(f"class index out of range for {x2.shape[1]} classes")
    shifted = x2 - x2.max(axis=1, keepdims=True)
    lse = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    logp = shifted - lse
    n = x2.shape[0]
    data = -logp[np.arange(n), lab].mean()

    def backward(g):
        if not logits.requires_grad:
            return
        grad = np.exp(logp)
        grad[np.arange(n), lab] -= 1.0
        grad *= g / n
        _accum(logits, grad[0] if single else grad)

    return _make(data, (logits,), backward)


def softmax(x: np.ndarray, axis: int = -1) -> np.ndarray:
    """Plain ndarray softmax for inference-side weight computation."""
    shifted = x - x.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=axis, keepdims=True)

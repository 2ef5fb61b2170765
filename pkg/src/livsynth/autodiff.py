"""Minimal reverse-mode autodiff over dense numpy arrays.

The primitive set is closed: every operator the compiler emits reduces to the
primitives below, so backward coverage is total. Reductions accumulate in
float64 regardless of storage dtype.
"""

from __future__ import annotations

import numpy as np


class ShapeError(ValueError):
    pass


class NumericError(FloatingPointError):
    """Non-finite intermediate; carries a context label."""

    def __init__(self, message: str, context: str = ""):
        super().__init__(message)
        self.context = context


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward", "name")

    def __init__(self, data, requires_grad: bool = False, name: str = ""):
        self.data = np.asarray(data)
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self._parents: tuple[Tensor, ...] = ()
        self._backward = None
        self.name = name

    @property
    def shape(self):
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, grad={self.requires_grad}, name={self.name!r})"

    # operator sugar used throughout the model code
    def __add__(self, other):
        return add(self, other)

    def __mul__(self, other):
        return mul(self, other)

    def __sub__(self, other):
        return add(self, mul(other, -1.0))

    def __matmul__(self, other):
        return matmul(self, other)

    def backward(self, grad=None):
        if grad is None:
            grad = np.ones_like(self.data)
        order: list[Tensor] = []
        seen: set[int] = set()
        stack = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if id(node) in seen:
                continue
            if expanded:
                seen.add(id(node))
                order.append(node)
                continue
            stack.append((node, True))
            for p in node._parents:
                if id(p) not in seen:
                    stack.append((p, False))
        grads: dict[int, np.ndarray] = {id(self): np.asarray(grad, dtype=self.data.dtype)}
        for node in reversed(order):
            g = grads.pop(id(node), None)
            if g is None:
                continue
            if node.requires_grad:
                node.grad = g if node.grad is None else node.grad + g
            if node._backward is None:
                continue
            for parent, pg in zip(node._parents, node._backward(g)):
                if pg is None:
                    continue
                pid = id(parent)
                if pid in grads:
                    grads[pid] = grads[pid] + pg
                else:
                    grads[pid] = pg


def _wrap(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(np.asarray(x))


def _node(data, parents, backward) -> Tensor:
    out = Tensor(data)
    if any(isinstance(p, Tensor) and (p.requires_grad or p._parents) for p in parents):
        out._parents = tuple(parents)
        out._backward = backward
    return out


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum a broadcast gradient back down to the original shape."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad.reshape(shape)


# --- elementwise / linear primitives ------------------------------------------

def add(a, b) -> Tensor:
    a, b = _wrap(a), _wrap(b)
    data = a.data + b.data
    return _node(data, (a, b), lambda g: (_unbroadcast(g, a.shape),
                                          _unbroadcast(g, b.shape)))


def mul(a, b) -> Tensor:
    a, b = _wrap(a), _wrap(b)
    data = a.data * b.data
    return _node(data, (a, b), lambda g: (_unbroadcast(g * b.data, a.shape),
                                          _unbroadcast(g * a.data, b.shape)))


def matmul(a, b) -> Tensor:
    a, b = _wrap(a), _wrap(b)
    if a.data.shape[-1] != b.data.shape[-2]:
        raise ShapeError(f"matmul: {a.shape} @ {b.shape}")
    data = a.data @ b.data

    def backward(g):
        ga = g @ np.swapaxes(b.data, -1, -2)
        gb = np.swapaxes(a.data, -1, -2) @ g
        return _unbroadcast(ga, a.shape), _unbroadcast(gb, b.shape)

    return _node(data, (a, b), backward)


def sigmoid(x) -> Tensor:
    x = _wrap(x)
    s = 1.0 / (1.0 + np.exp(-x.data))
    return _node(s, (x,), lambda g: (g * s * (1.0 - s),))


def swish(x) -> Tensor:
    x = _wrap(x)
    s = 1.0 / (1.0 + np.exp(-x.data))
    data = x.data * s
    return _node(data, (x,), lambda g: (g * (s + data * (1.0 - s)),))


def relu(x) -> Tensor:
    x = _wrap(x)
    mask = x.data > 0
    return _node(np.where(mask, x.data, 0.0), (x,), lambda g: (g * mask,))


def reshape(x, shape) -> Tensor:
    x = _wrap(x)
    old = x.shape
    return _node(x.data.reshape(shape), (x,), lambda g: (g.reshape(old),))


def transpose(x, axes) -> Tensor:
    x = _wrap(x)
    inverse = np.argsort(axes)
    return _node(x.data.transpose(axes), (x,),
                 lambda g: (g.transpose(inverse),))


def repeat_axis(x, axis: int, repeats: int) -> Tensor:
    """Tile along a new position inside `axis` (grad sums over the copies)."""
    x = _wrap(x)
    data = np.repeat(x.data, repeats, axis=axis)
    old = x.shape

    def backward(g):
        shp = list(old)
        shp[axis:axis + 1] = [old[axis], repeats]
        return (g.reshape(shp).sum(axis=axis + 1),)

    return _node(data, (x,), backward)


def sum_axis(x, axis: int) -> Tensor:
    x = _wrap(x)
    data = x.data.sum(axis=axis, dtype=np.float64).astype(x.dtype)
    old = x.shape

    def backward(g):
        return (np.broadcast_to(np.expand_dims(g, axis), old).copy(),)

    return _node(data, (x,), backward)


# --- normalization, attention, lookup ------------------------------------------

def rms_norm(x, gain, eps: float = 1e-6) -> Tensor:
    """Root-mean-square normalization over the last axis, with learned scale."""
    x, gain = _wrap(x), _wrap(gain)
    ms = np.mean(np.square(x.data, dtype=np.float64), axis=-1, keepdims=True)
    inv = (1.0 / np.sqrt(ms + eps)).astype(x.dtype)
    xhat = x.data * inv
    data = xhat * gain.data

    def backward(g):
        d = x.data.shape[-1]
        gx_hat = g * gain.data
        dot = np.sum(gx_hat * xhat, axis=-1, keepdims=True, dtype=np.float64).astype(x.dtype)
        gx = inv * (gx_hat - xhat * dot / d)
        ggain = _unbroadcast(g * xhat, gain.shape)
        return gx, ggain

    return _node(data, (x, gain), backward)


def causal_softmax(scores) -> Tensor:
    """Row softmax over the last axis with a strict causal mask (j <= i)."""
    scores = _wrap(scores)
    L = scores.shape[-1]
    if scores.shape[-2] != L:
        raise ShapeError(f"causal_softmax expects [..., L, L], got {scores.shape}")
    mask = np.tril(np.ones((L, L), dtype=bool))
    neg = np.finfo(scores.data.dtype if scores.data.dtype.kind == "f" else np.float64).min
    masked = np.where(mask, scores.data, neg)
    masked = masked - masked.max(axis=-1, keepdims=True)
    ex = np.exp(masked) * mask
    denom = ex.sum(axis=-1, keepdims=True, dtype=np.float64).astype(ex.dtype)
    probs = ex / denom

    def backward(g):
        dot = np.sum(g * probs, axis=-1, keepdims=True, dtype=np.float64).astype(ex.dtype)
        return ((g - dot) * probs,)

    return _node(probs, (scores,), backward)


def causal_mask(x, band: int | None = None) -> Tensor:
    """Zero out future positions (j > i) of [..., L, L]; optional band limit."""
    x = _wrap(x)
    L = x.shape[-1]
    mask = np.tril(np.ones((L, L), dtype=x.data.dtype))
    if band is not None:
        mask *= np.triu(np.ones((L, L), dtype=x.data.dtype), -band + 1)
    return _node(x.data * mask, (x,), lambda g: (g * mask,))


def embed_lookup(table, indices) -> Tensor:
    table = _wrap(table)
    idx = np.asarray(indices)
    if idx.min() < 0 or idx.max() >= table.shape[0]:
        raise ShapeError(f"token id out of vocabulary (0..{table.shape[0] - 1})")
    data = table.data[idx]

    def backward(g):
        gt = np.zeros_like(table.data)
        np.add.at(gt, idx, g)
        return (gt,)

    return _node(data, (table,), backward)


# --- sequence primitives ---------------------------------------------------------

def causal_conv1d(x, kernel) -> Tensor:
    """Depthwise causal convolution. x: [..., L, C], kernel: [K, C].

    y[t] = sum_tau kernel[tau] * x[t - tau].
    """
    x, kernel = _wrap(x), _wrap(kernel)
    K, C = kernel.shape
    if x.shape[-1] != C:
        raise ShapeError(f"conv channel mismatch: {x.shape} vs kernel {kernel.shape}")
    L = x.shape[-2]
    data = np.zeros_like(x.data)
    for tau in range(min(K, L)):
        if tau == 0:
            data += kernel.data[0] * x.data
        else:
            data[..., tau:, :] += kernel.data[tau] * x.data[..., :-tau, :]

    def backward(g):
        gx = np.zeros_like(x.data)
        gk = np.zeros_like(kernel.data)
        for tau in range(min(K, L)):
            if tau == 0:
                gx += kernel.data[0] * g
                gk[0] = (g * x.data).reshape(-1, C).sum(axis=0, dtype=np.float64)
            else:
                gx[..., :-tau, :] += kernel.data[tau] * g[..., tau:, :]
                gk[tau] = (g[..., tau:, :] * x.data[..., :-tau, :]).reshape(-1, C).sum(
                    axis=0, dtype=np.float64)
        return gx, gk.astype(kernel.dtype)

    return _node(data, (x, kernel), backward)


def gated_scan(a, u) -> Tensor:
    """Linear recurrence h[t] = a[t] * h[t-1] + u[t] over axis -2 (sequential).

    `a` may broadcast against `u` in trailing axes.
    """
    a, u = _wrap(a), _wrap(u)
    L = u.shape[-2]
    ab = np.broadcast_to(a.data, u.shape)
    h = np.empty_like(u.data)
    h[..., 0, :] = u.data[..., 0, :]
    for t in range(1, L):
        h[..., t, :] = ab[..., t, :] * h[..., t - 1, :] + u.data[..., t, :]

    def backward(g):
        gu = np.empty_like(u.data)
        gu[..., L - 1, :] = g[..., L - 1, :]
        for t in range(L - 2, -1, -1):
            gu[..., t, :] = g[..., t, :] + ab[..., t + 1, :] * gu[..., t + 1, :]
        ga = np.zeros(u.shape, dtype=u.dtype)
        ga[..., 1:, :] = gu[..., 1:, :] * h[..., :-1, :]
        return _unbroadcast(ga, a.shape), gu

    return _node(h, (a, u), backward)


def gated_scan_parallel(a: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Associative-scan evaluation of the same recurrence (numpy only).

    Combines (a2*a1, a2*u1 + u2) by log-step doubling; used as the parallel
    contract check against the sequential primitive.
    """
    a = np.broadcast_to(np.asarray(a), u.shape).copy()
    h = np.asarray(u).copy()
    L = u.shape[-2]
    step = 1
    while step < L:
        a_prev = a[..., :-step, :]
        h_prev = h[..., :-step, :]
        h[..., step:, :] = h[..., step:, :] + a[..., step:, :] * h_prev
        a[..., step:, :] = a[..., step:, :] * a_prev
        step *= 2
    return h


def conv_direct(x: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """Non-differentiable direct causal depthwise convolution (oracle helper)."""
    K, C = kernel.shape
    out = np.zeros_like(x)
    L = x.shape[-2]
    for tau in range(min(K, L)):
        if tau == 0:
            out += kernel[0] * x
        else:
            out[..., tau:, :] += kernel[tau] * x[..., :-tau, :]
    return out


def conv_fft(x: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """Transform-based causal depthwise convolution (consistency check path)."""
    L = x.shape[-2]
    K = kernel.shape[0]
    n = 1
    while n < L + K:
        n *= 2
    xf = np.fft.rfft(x, n=n, axis=-2)
    kf = np.fft.rfft(kernel, n=n, axis=0)
    out = np.fft.irfft(xf * kf, n=n, axis=-2)[..., :L, :]
    return out.astype(x.dtype)


# --- loss -------------------------------------------------------------------------

def cross_entropy(logits, targets, mask=None) -> Tensor:
    """Mean next-token cross entropy. logits: [..., L, V], targets: [..., L]."""
    logits = _wrap(logits)
    targets = np.asarray(targets)
    V = logits.shape[-1]
    if targets.shape != logits.shape[:-1]:
        raise ShapeError(f"targets {targets.shape} vs logits {logits.shape}")
    if mask is None:
        mask = np.ones(targets.shape, dtype=logits.data.dtype)
    else:
        mask = np.asarray(mask, dtype=logits.data.dtype)
    z = logits.data
    zmax = z.max(axis=-1, keepdims=True)
    lse = zmax[..., 0] + np.log(np.sum(np.exp(z - zmax), axis=-1, dtype=np.float64)).astype(z.dtype)
    picked = np.take_along_axis(z, targets[..., None], axis=-1)[..., 0]
    total = np.sum(mask, dtype=np.float64)
    loss = float(np.sum((lse - picked) * mask, dtype=np.float64) / total)
    if not np.isfinite(loss):
        raise NumericError("non-finite loss", context="cross_entropy")

    def backward(g):
        probs = np.exp(z - zmax)
        probs /= probs.sum(axis=-1, keepdims=True)
        onehot = np.zeros_like(z)
        np.put_along_axis(onehot, targets[..., None], 1.0, axis=-1)
        gl = (probs - onehot) * (mask / total)[..., None]
        return (np.asarray(g) * gl.astype(z.dtype),)

    return _node(np.asarray(loss, dtype=z.dtype), (logits,), backward)

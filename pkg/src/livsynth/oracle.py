"""Dense reference semantics for LIV instances.

For a concrete input sequence x, every instance is equivalent to a dense
input-varying operator T with y_i = sum_j T[i, j] @ x_j. This module builds
that tensor explicitly from the instance's weights, using plain numpy and
O(L^2) loops, never calling the structured fast paths. It exists so the fast
paths can be tested against an independent evaluation.
"""

from __future__ import annotations

import math

import numpy as np

from .model import CompiledBackbone, LivInstance, positional_basis
from .pool import (CHANNEL_DENSE, CHANNEL_DIAGONAL, CHANNEL_GROUPED,
                   NONLIN_NONE, NONLIN_RELU, NONLIN_SOFTMAX, NONLIN_SWISH)


class OracleUnsupportedError(NotImplementedError):
    """Raised for instances whose groups are routed in from another instance."""


def dense_apply(T: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Apply a dense operator tensor [L, L, d_out, d_in] to a sequence [L, d_in]."""
    return np.einsum("ijab,jb->ia", T, x)


def _sigmoid(z: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-z))


def _swish(z: np.ndarray) -> np.ndarray:
    return z * _sigmoid(z)


def _conv_seq(x: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """Causal depthwise convolution, written as a per-step sum."""
    L = x.shape[0]
    K = kernel.shape[0]
    out = np.zeros_like(x)
    for t in range(L):
        for tau in range(min(K, t + 1)):
            out[t] += kernel[tau] * x[t - tau]
    return out


def _toeplitz_proj_map(w: np.ndarray, kernel: np.ndarray | None, L: int) -> np.ndarray:
    """Map tensor P[j, m] (c x d) of v_j = sum_tau kernel[tau] * (x_{j-tau} @ w)."""
    d, c = w.shape
    P = np.zeros((L, L, c, d), dtype=w.dtype)
    if kernel is None:
        for j in range(L):
            P[j, j] = w.T
        return P
    K = kernel.shape[0]
    for j in range(L):
        for tau in range(min(K, j + 1)):
            P[j, j - tau] = kernel[tau][:, None] * w.T
    return P


def _score_matrix(scores: np.ndarray, nonlinearity: int, band: int | None) -> np.ndarray:
    """Mirror of the fast path's masked score nonlinearity, per head."""
    L = scores.shape[-1]
    causal = np.tril(np.ones((L, L), dtype=bool))
    if nonlinearity == NONLIN_SOFTMAX:
        masked = np.where(causal, scores, -np.inf)
        masked = masked - masked.max(axis=-1, keepdims=True)
        ex = np.exp(masked) * causal
        return ex / ex.sum(axis=-1, keepdims=True)
    if nonlinearity == NONLIN_RELU:
        out = np.maximum(scores, 0.0)
    elif nonlinearity == NONLIN_SWISH:
        out = _swish(scores)
    else:
        out = scores.copy()
    keep = causal.astype(scores.dtype)
    if band is not None:
        keep *= np.triu(np.ones((L, L), dtype=scores.dtype), -band + 1)
    return out * keep


def materialize_dense(model: CompiledBackbone, instance_index: int,
                      x: np.ndarray, cap: int = 32) -> np.ndarray:
    """Dense operator tensor [L, L, d, d] for one instance at input x [L, d].

    Refuses sequences longer than `cap`: the construction is O(L^2 d^2) and
    exists only for verification at small sizes.
    """
    if np.asarray(x).shape[0] > cap:
        raise ValueError(f"sequence length {np.asarray(x).shape[0]} exceeds "
                         f"the oracle cap {cap}")
    inst = model.instances[instance_index]
    if inst.consumes:
        raise OracleUnsupportedError(
            f"instance {instance_index} consumes routed groups; "
            "materialize the producer instead")
    params = model.materialize()
    x = np.asarray(x, dtype=np.float64)
    L, d = x.shape
    T = _branch_dense(model, inst, params, x, 0)
    if inst.branches == 2:
        T = T - _branch_dense(model, inst, params, x, 1)
    return T


def _p(params, inst: LivInstance, name: str, branch: int) -> np.ndarray:
    return np.asarray(params[f"{inst.feat_binding}.{name}.b{branch}"], dtype=np.float64)


def _op(params, inst: LivInstance, name: str, branch: int) -> np.ndarray:
    return np.asarray(params[f"op.i{inst.index}.{name}.b{branch}"], dtype=np.float64)


def _branch_dense(model: CompiledBackbone, inst: LivInstance, params,
                  x: np.ndarray, br: int) -> np.ndarray:
    L, d = x.shape
    T = np.zeros((L, L, d, d))
    if inst.family == "attention":
        kq = _p(params, inst, "kq", br) if inst.featurizer_toeplitz else None
        kk = _p(params, inst, "kk", br) if inst.featurizer_toeplitz else None
        kv = _p(params, inst, "kv", br) if inst.featurizer_toeplitz else None
        q = x @ _p(params, inst, "wq", br)
        k = x @ _p(params, inst, "wk", br)
        if kq is not None:
            q = _conv_seq(q, kq)
            k = _conv_seq(k, kk)
        Pv = _toeplitz_proj_map(_p(params, inst, "wv", br), kv, L)
        hd = inst.head_dim
        wo = _op(params, inst, "wo", br)
        band = None if inst.op.sparsity_mask == 1 else hd
        for h in range(inst.heads):
            kv_head = h // inst.kv_repeat
            qh = q[:, h * hd:(h + 1) * hd]
            kh = k[:, kv_head * hd:(kv_head + 1) * hd]
            scores = (qh @ kh.T) / math.sqrt(hd)
            A = _score_matrix(scores, inst.op.nonlinearity, band)
            Pvh = Pv[:, :, kv_head * hd:(kv_head + 1) * hd, :]
            Th = np.einsum("ij,jmab->imab", A, Pvh)
            woh = wo[h * hd:(h + 1) * hd, :]
            T += np.einsum("imab,ac->imcb", Th, woh)
    elif inst.family == "recurrence":
        z = _swish(_conv_seq(x @ _p(params, inst, "wz", br), _p(params, inst, "kz", br))
                   + _p(params, inst, "bz", br))
        a = _sigmoid(_conv_seq(x @ _p(params, inst, "wa", br), _p(params, inst, "ka", br))
                     + _p(params, inst, "ba", br))
        b = _conv_seq(x @ _p(params, inst, "wb", br), _p(params, inst, "kb", br))
        c = _conv_seq(x @ _p(params, inst, "wc", br), _p(params, inst, "kc", br))
        Px = _toeplitz_proj_map(_p(params, inst, "wx", br),
                                _p(params, inst, "kx", br), L)
        cm = _op(params, inst, "cm", br)
        # decay products P[i, j, alpha] = prod_{t=j+1..i} a[t, alpha]
        prod = np.zeros((L, L, d))
        for i in range(L):
            prod[i, i] = 1.0
            for j in range(i - 1, -1, -1):
                prod[i, j] = prod[i, j + 1] * a[j + 1]
        cb = c @ b.T  # cb[i, j] = sum_nu c[i, nu] b[j, nu]
        S = np.tril(cb)[:, :, None] * prod  # prod is already zero for j > i
        out_scale = (z * cm)  # [L, d]
        T = np.einsum("ia,ija,jmab->imab", out_scale, S, Px)
    elif inst.family == "convolution":
        bcoef = _conv_seq(x * _p(params, inst, "sb", br), _p(params, inst, "fb", br))
        gate = _conv_seq(x * _p(params, inst, "sg", br), _p(params, inst, "fg", br))
        if inst.kernel_len is not None:
            kernel = _p(params, inst, "ker", br)
        else:
            basis = positional_basis(L, model.dims.gconv2_basis, np.float64)
            kernel = basis @ _p(params, inst, "wgen", br)
        cm = _op(params, inst, "cm", br)
        K = kernel.shape[0]
        for i in range(L):
            for tau in range(min(K, i + 1)):
                j = i - tau
                coeff = cm * gate[i] * kernel[tau] * bcoef[j]
                T[i, j] += np.diag(coeff)
    elif inst.family == "memoryless":
        wu = _p(params, inst, "wu", br)
        wd = _op(params, inst, "wd", br)
        gate = x @ _p(params, inst, "wg", br)
        if inst.op.nonlinearity == NONLIN_SWISH:
            gate = _swish(gate)
        elif inst.op.nonlinearity == NONLIN_RELU:
            gate = np.maximum(gate, 0.0)
        for i in range(L):
            # T[i, i] = wd.T @ diag(gate_i) @ wu.T
            T[i, i] = (wd.T * gate[i]) @ wu.T
    else:
        raise OracleUnsupportedError(f"family {inst.family}")
    return T

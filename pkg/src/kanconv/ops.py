"""Differentiable primitive ops: elementwise math, reductions, shaping, matmul."""

from __future__ import annotations

import numpy as np
from scipy.special import erf

from .tensor import Tensor, as_tensor, record

_INV_SQRT2 = 0.7071067811865476
_INV_SQRT_2PI = 0.3989422804014327


def _unbroadcast(g: np.ndarray, shape) -> np.ndarray:
    """Sum `g` down to `shape`, inverting numpy broadcasting."""
    if g.shape == shape:
        return g
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g


def _pair(a, b):
    a = as_tensor(a)
    b = as_tensor(b, like=a)
    a = as_tensor(a, like=b)
    if a.dtype != b.dtype:
        raise TypeError(f"dtype mismatch: {a.dtype} vs {b.dtype}")
    return a, b


# ---------------------------------------------------------------------------
# arithmetic


def add(a, b) -> Tensor:
    a, b = _pair(a, b)
    out = Tensor(a.data + b.data)
    return record(
        out,
        (a, b),
        lambda g: (_unbroadcast(g, a.shape), _unbroadcast(g, b.shape)),
        "add",
    )


def sub(a, b) -> Tensor:
    a, b = _pair(a, b)
    out = Tensor(a.data - b.data)
    return record(
        out,
        (a, b),
        lambda g: (_unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)),
        "sub",
    )


def mul(a, b) -> Tensor:
    a, b = _pair(a, b)
    out = Tensor(a.data * b.data)
    return record(
        out,
        (a, b),
        lambda g: (
            _unbroadcast(g * b.data, a.shape),
            _unbroadcast(g * a.data, b.shape),
        ),
        "mul",
    )


def div(a, b) -> Tensor:
    """Elementwise a / b. Caller guarantees b is nowhere zero."""
    a, b = _pair(a, b)
    out = Tensor(a.data / b.data)
    return record(
        out,
        (a, b),
        lambda g: (
            _unbroadcast(g / b.data, a.shape),
            _unbroadcast(-g * a.data / (b.data * b.data), b.shape),
        ),
        "div",
    )


def neg(a) -> Tensor:
    a = as_tensor(a)
    out = Tensor(-a.data)
    return record(out, (a,), lambda g: (-g,), "neg")


def pow_scalar(a, p: float) -> Tensor:
    """a ** p for a constant exponent. Non-integer p requires a > 0."""
    a = as_tensor(a)
    out = Tensor(a.data**p)
    return record(out, (a,), lambda g: (g * p * a.data ** (p - 1.0),), "pow")


def exp(a) -> Tensor:
    a = as_tensor(a)
    out = Tensor(np.exp(a.data))
    return record(out, (a,), lambda g: (g * out.data,), "exp")


def log(a) -> Tensor:
    """Natural log; domain a > 0 (raises on violation)."""
    a = as_tensor(a)
    if np.min(a.data) <= 0.0:
        raise ValueError("log domain error: inputs must be strictly positive")
    out = Tensor(np.log(a.data))
    return record(out, (a,), lambda g: (g / a.data,), "log")


def sqrt(a) -> Tensor:
    """Square root; domain a > 0 for the gradient."""
    a = as_tensor(a)
    out = Tensor(np.sqrt(a.data))
    return record(out, (a,), lambda g: (g * 0.5 / out.data,), "sqrt")


def absolute(a) -> Tensor:
    """|a|, with the subgradient sign(0) = 0."""
    a = as_tensor(a)
    out = Tensor(np.abs(a.data))
    return record(out, (a,), lambda g: (g * np.sign(a.data),), "abs")


# ---------------------------------------------------------------------------
# activations


def tanh(a) -> Tensor:
    a = as_tensor(a)
    out = Tensor(np.tanh(a.data))
    return record(out, (a,), lambda g: (g * (1.0 - out.data * out.data),), "tanh")


def _stable_sigmoid(x: np.ndarray) -> np.ndarray:
    t = np.exp(-np.abs(x))
    s = np.where(x >= 0, 1.0 / (1.0 + t), t / (1.0 + t))
    return s.astype(x.dtype, copy=False)


def sigmoid(a) -> Tensor:
    a = as_tensor(a)
    s = _stable_sigmoid(a.data)
    out = Tensor(s)
    return record(out, (a,), lambda g: (g * s * (1.0 - s),), "sigmoid")


def silu(a) -> Tensor:
    """x * sigmoid(x)."""
    a = as_tensor(a)
    x = a.data
    s = _stable_sigmoid(x)
    out = Tensor(x * s)
    return record(out, (a,), lambda g: (g * s * (1.0 + x * (1.0 - s)),), "silu")


def gelu(a) -> Tensor:
    """Exact gelu: x * Phi(x) with the Gaussian CDF."""
    a = as_tensor(a)
    x = a.data
    phi = 0.5 * (1.0 + erf(x * _INV_SQRT2))
    phi = phi.astype(x.dtype, copy=False)
    out = Tensor(x * phi)

    def bw(g):
        pdf = _INV_SQRT_2PI * np.exp(-0.5 * x * x)
        return (g * (phi + x * pdf.astype(x.dtype, copy=False)),)

    return record(out, (a,), bw, "gelu")


# ---------------------------------------------------------------------------
# reductions


def tsum(a, axis=None, keepdims: bool = False) -> Tensor:
    a = as_tensor(a)
    out = Tensor(np.sum(a.data, axis=axis, keepdims=keepdims))

    def bw(g):
        if axis is None:
            return (np.broadcast_to(g.reshape(()), a.shape),)
        gg = g if keepdims else np.expand_dims(g, axis)
        return (np.broadcast_to(gg, a.shape),)

    return record(out, (a,), bw, "sum")


def tmean(a, axis=None, keepdims: bool = False) -> Tensor:
    a = as_tensor(a)
    out = Tensor(np.mean(a.data, axis=axis, keepdims=keepdims))
    if axis is None:
        count = a.size
    else:
        axes = axis if isinstance(axis, tuple) else (axis,)
        count = 1
        for ax in axes:
            count *= a.shape[ax]

    def bw(g):
        if axis is None:
            return (np.broadcast_to((g / count).reshape(()), a.shape),)
        gg = g if keepdims else np.expand_dims(g, axis)
        return (np.broadcast_to(gg / count, a.shape),)

    return record(out, (a,), bw, "mean")


def variance(a, axis=None, keepdims: bool = False) -> Tensor:
    """Population variance over `axis`, built from mean/mul (differentiable)."""
    m = tmean(a, axis=axis, keepdims=True)
    d = sub(a, m)
    v = tmean(mul(d, d), axis=axis, keepdims=keepdims)
    return v


def softmax(a, axis: int = -1) -> Tensor:
    a = as_tensor(a)
    if a.shape[axis] == 0:
        raise ValueError("softmax over an empty axis")
    x = a.data
    z = x - np.max(x, axis=axis, keepdims=True)
    e = np.exp(z)
    s = e / np.sum(e, axis=axis, keepdims=True)
    out = Tensor(s)

    def bw(g):
        dot = np.sum(g * s, axis=axis, keepdims=True)
        return (s * (g - dot),)

    return record(out, (a,), bw, "softmax")


def log_softmax(a, axis: int = -1) -> Tensor:
    a = as_tensor(a)
    if a.shape[axis] == 0:
        raise ValueError("log_softmax over an empty axis")
    x = a.data
    z = x - np.max(x, axis=axis, keepdims=True)
    ls = z - np.log(np.sum(np.exp(z), axis=axis, keepdims=True))
    out = Tensor(ls)
    sm = np.exp(ls)

    def bw(g):
        return (g - sm * np.sum(g, axis=axis, keepdims=True),)

    return record(out, (a,), bw, "log_softmax")


# ---------------------------------------------------------------------------
# shaping


def reshape(a, shape) -> Tensor:
    a = as_tensor(a)
    out = Tensor(a.data.reshape(shape))
    return record(out, (a,), lambda g: (g.reshape(a.shape),), "reshape")


def transpose(a, axes) -> Tensor:
    a = as_tensor(a)
    axes = tuple(axes)
    inv = tuple(np.argsort(axes))
    out = Tensor(np.transpose(a.data, axes))
    return record(out, (a,), lambda g: (np.transpose(g, inv),), "transpose")


def concat(tensors, axis: int = 0) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    out = Tensor(np.concatenate([t.data for t in tensors], axis=axis))
    sizes = [t.shape[axis] for t in tensors]
    splits = np.cumsum(sizes)[:-1]

    def bw(g):
        return tuple(np.split(g, splits, axis=axis))

    return record(out, tuple(tensors), bw, "concat")


def slice_axis(a, axis: int, start: int, stop: int) -> Tensor:
    a = as_tensor(a)
    idx = [slice(None)] * a.ndim
    idx[axis] = slice(start, stop)
    idx = tuple(idx)
    out = Tensor(a.data[idx])

    def bw(g):
        full = np.zeros(a.shape, dtype=a.dtype)
        full[idx] = g
        return (full,)

    return record(out, (a,), bw, "slice")


def take_last(a, n: int) -> Tensor:
    """Select index `n` along the last axis, dropping that axis."""
    a = as_tensor(a)
    out = Tensor(a.data[..., n])

    def bw(g):
        full = np.zeros(a.shape, dtype=a.dtype)
        full[..., n] = g
        return (full,)

    return record(out, (a,), bw, "take_last")


def index_select(a, idx, axis: int = 0) -> Tensor:
    """Rows of `a` at integer positions `idx` along `axis`."""
    a = as_tensor(a)
    idx = np.asarray(idx, dtype=np.int64)
    out = Tensor(np.take(a.data, idx, axis=axis))

    def bw(g):
        full = np.zeros(a.shape, dtype=a.dtype)
        np.add.at(full, (slice(None),) * axis + (idx,), g)
        return (full,)

    return record(out, (a,), bw, "index_select")


def index_put(src, idx, length: int) -> Tensor:
    """Scatter rows of `src` to positions `idx` of a zero tensor of `length` rows."""
    src = as_tensor(src)
    idx = np.asarray(idx, dtype=np.int64)
    data = np.zeros((length,) + src.shape[1:], dtype=src.dtype)
    data[idx] = src.data
    out = Tensor(data)
    return record(out, (src,), lambda g: (g[idx],), "index_put")


def pad2d(a, padding: int) -> Tensor:
    """Zero-pad the trailing two (spatial) axes symmetrically."""
    a = as_tensor(a)
    if padding == 0:
        return a
    p = int(padding)
    width = [(0, 0)] * (a.ndim - 2) + [(p, p), (p, p)]
    out = Tensor(np.pad(a.data, width))
    sl = (Ellipsis, slice(p, a.shape[-2] + p), slice(p, a.shape[-1] + p))
    return record(out, (a,), lambda g: (g[sl],), "pad2d")


# ---------------------------------------------------------------------------
# linear algebra


def matmul(a, b) -> Tensor:
    """numpy-semantics matrix product on the trailing two axes (>=2-D inputs)."""
    a, b = _pair(a, b)
    if a.ndim < 2 or b.ndim < 2:
        raise ValueError("matmul requires >=2-D tensors")
    out = Tensor(np.matmul(a.data, b.data))
    needs = (a.requires_grad, b.requires_grad)

    def bw(g):
        ga = gb = None
        if needs[0]:
            ga = _unbroadcast(np.matmul(g, np.swapaxes(b.data, -1, -2)), a.shape)
        if needs[1]:
            gb = _unbroadcast(np.matmul(np.swapaxes(a.data, -1, -2), g), b.shape)
        return (ga, gb)

    return record(out, (a, b), bw, "matmul")


def attention_scores(q, k, scale: float) -> Tensor:
    """softmax(scale * q^T k) over the last axis, fused to keep one PxP buffer.

    q, k: (B, C, P). Returns (B, P, P) row-stochastic scores. The logits buffer
    is softmaxed in place so the scores are the only persistent O(P^2) array.
    """
    q, k = _pair(q, k)
    raw = np.matmul(np.swapaxes(q.data, -1, -2), k.data)
    raw *= scale
    raw -= np.max(raw, axis=-1, keepdims=True)
    np.exp(raw, out=raw)
    raw /= np.sum(raw, axis=-1, keepdims=True)
    s = raw
    out = Tensor(s)

    def bw(g):
        d = s * (g - np.sum(g * s, axis=-1, keepdims=True))
        gq = scale * np.matmul(k.data, np.swapaxes(d, -1, -2))
        gk = scale * np.matmul(q.data, d)
        return (gq, gk)

    return record(out, (q, k), bw, "attention_scores")

"""2-D convolution, pooling and resampling ops (im2col + BLAS gemm)."""

from __future__ import annotations

import numpy as np

from .tensor import Tensor, record


def conv_output_extent(n: int, k: int, stride: int, dilation: int, padding: int) -> int:
    eff = dilation * (k - 1) + 1
    if n + 2 * padding < eff:
        raise ValueError(
            f"spatial extent {n} with padding {padding} is smaller than the "
            f"dilated kernel footprint {eff}"
        )
    return (n + 2 * padding - eff) // stride + 1


def _im2col(xp: np.ndarray, kh: int, kw: int, stride: int, dilation: int, ho: int, wo: int):
    """(B, C, Hp, Wp) -> (B, C, kh, kw, ho, wo) window stack (channel-major, then kernel)."""
    b, c = xp.shape[:2]
    cols = np.empty((b, c, kh, kw, ho, wo), dtype=xp.dtype)
    for ki in range(kh):
        si = slice(ki * dilation, ki * dilation + (ho - 1) * stride + 1, stride)
        for kj in range(kw):
            sj = slice(kj * dilation, kj * dilation + (wo - 1) * stride + 1, stride)
            cols[:, :, ki, kj] = xp[:, :, si, sj]
    return cols


def _col2im_add(gxp: np.ndarray, gcols: np.ndarray, kh: int, kw: int, stride: int, dilation: int):
    """Scatter-add (..., ho, wo, C..., kh, kw)-ordered window grads back into gxp.

    gcols layout: (B, ho, wo, C, kh, kw) for groups folded into C.
    gxp layout: (B, C, Hp, Wp).
    """
    ho, wo = gcols.shape[1], gcols.shape[2]
    for ki in range(kh):
        si = slice(ki * dilation, ki * dilation + (ho - 1) * stride + 1, stride)
        for kj in range(kw):
            sj = slice(kj * dilation, kj * dilation + (wo - 1) * stride + 1, stride)
            gxp[:, :, si, sj] += gcols[:, :, :, :, ki, kj].transpose(0, 3, 1, 2)


def conv2d(
    x: Tensor,
    w: Tensor,
    stride: int = 1,
    dilation: int = 1,
    padding: int = 0,
    groups: int = 1,
) -> Tensor:
    """Cross-correlation of (B, C, H, W) with weights (O, C/groups, kh, kw).

    Output extent follows floor((n + 2p - d*(k-1) - 1)/s) + 1. Differentiable
    w.r.t. both input and weights; accumulation order is fixed (channel-major,
    then kernel rows/cols) for reproducibility.
    """
    if x.ndim != 4 or w.ndim != 4:
        raise ValueError(f"conv2d expects 4-D input/weight, got {x.shape} and {w.shape}")
    b, c, h, wdt = x.shape
    o, cg, kh, kw = w.shape
    if c % groups != 0 or o % groups != 0:
        raise ValueError(f"channels ({c} -> {o}) not divisible by groups={groups}")
    if cg != c // groups:
        raise ValueError(
            f"weight expects {cg} input channels per group but input provides {c // groups}"
        )
    if x.dtype != w.dtype:
        raise TypeError(f"dtype mismatch: input {x.dtype} vs weight {w.dtype}")
    ho = conv_output_extent(h, kh, stride, dilation, padding)
    wo = conv_output_extent(wdt, kw, stride, dilation, padding)

    xp = x.data
    if padding:
        xp = np.pad(xp, ((0, 0), (0, 0), (padding, padding), (padding, padding)))
    cols = _im2col(xp, kh, kw, stride, dilation, ho, wo)
    p = ho * wo
    kg = cg * kh * kw

    if groups == 1:
        cols_flat = cols.reshape(b, kg, p).transpose(0, 2, 1).reshape(b * p, kg)
        w_flat = w.data.reshape(o, kg)
        out_flat = cols_flat @ w_flat.T
        out_data = np.ascontiguousarray(
            out_flat.reshape(b, ho, wo, o).transpose(0, 3, 1, 2)
        )
    else:
        colsg = (
            cols.reshape(b, groups, kg, p).transpose(1, 0, 3, 2).reshape(groups, b * p, kg)
        )
        wg = w.data.reshape(groups, o // groups, kg)
        outg = np.matmul(colsg, wg.transpose(0, 2, 1))
        out_data = np.ascontiguousarray(
            outg.reshape(groups, b, ho, wo, o // groups).transpose(1, 0, 4, 2, 3)
        ).reshape(b, o, ho, wo)

    out = Tensor(out_data)
    need_x, need_w = x.requires_grad, w.requires_grad
    saved_cols = (cols_flat if groups == 1 else colsg) if need_w else None
    del cols

    def bw(g):
        gx = gw = None
        if groups == 1:
            g_flat = g.transpose(0, 2, 3, 1).reshape(b * p, o)
            if need_w:
                gw = (g_flat.T @ saved_cols).reshape(o, cg, kh, kw)
            if need_x:
                gcols = (g_flat @ w_flat).reshape(b, ho, wo, c, kh, kw)
                gxp = np.zeros_like(xp)
                _col2im_add(gxp, gcols, kh, kw, stride, dilation)
                gx = gxp[:, :, padding : padding + h, padding : padding + wdt] if padding else gxp
        else:
            og = o // groups
            g_t = g.reshape(b, groups, og, p).transpose(1, 0, 3, 2).reshape(groups, b * p, og)
            if need_w:
                gw = np.matmul(g_t.transpose(0, 2, 1), saved_cols).reshape(o, cg, kh, kw)
            if need_x:
                gcolsg = np.matmul(g_t, wg)  # (groups, b*p, kg)
                gcols = np.ascontiguousarray(
                    gcolsg.reshape(groups, b, ho, wo, cg, kh, kw).transpose(1, 2, 3, 0, 4, 5, 6)
                ).reshape(b, ho, wo, c, kh, kw)
                gxp = np.zeros_like(xp)
                _col2im_add(gxp, gcols, kh, kw, stride, dilation)
                gx = gxp[:, :, padding : padding + h, padding : padding + wdt] if padding else gxp
        return (gx, gw)

    return record(out, (x, w), bw, "conv2d")


def maxpool2d(x: Tensor, kernel: int = 2, stride: int | None = None) -> Tensor:
    """Max pooling with no padding; ties resolve to the first window position."""
    if stride is None:
        stride = kernel
    b, c, h, w = x.shape
    ho = conv_output_extent(h, kernel, stride, 1, 0)
    wo = conv_output_extent(w, kernel, stride, 1, 0)
    cols = _im2col(x.data, kernel, kernel, stride, 1, ho, wo)
    win = cols.reshape(b, c, kernel * kernel, ho, wo)
    am = np.argmax(win, axis=2)
    out_data = np.take_along_axis(win, am[:, :, None], axis=2)[:, :, 0]
    out = Tensor(out_data)

    def bw(g):
        scat = np.zeros_like(win)
        np.put_along_axis(scat, am[:, :, None], g[:, :, None], axis=2)
        scat = scat.reshape(b, c, kernel, kernel, ho, wo)
        gx = np.zeros_like(x.data)
        for ki in range(kernel):
            si = slice(ki, ki + (ho - 1) * stride + 1, stride)
            for kj in range(kernel):
                sj = slice(kj, kj + (wo - 1) * stride + 1, stride)
                gx[:, :, si, sj] += scat[:, :, ki, kj]
        return (gx,)

    return record(out, (x,), bw, "maxpool2d")


def global_avg_pool(x: Tensor) -> Tensor:
    """(B, C, H, W) -> (B, C) spatial mean."""
    b, c, h, w = x.shape
    out = Tensor(x.data.mean(axis=(2, 3)))

    def bw(g):
        return (np.broadcast_to(g[:, :, None, None] / (h * w), x.shape),)

    return record(out, (x,), bw, "global_avg_pool")


def upsample2d_nearest(x: Tensor, factor: int = 2) -> Tensor:
    """Nearest-neighbour spatial upsampling by an integer factor."""
    b, c, h, w = x.shape
    out = Tensor(x.data.repeat(factor, axis=2).repeat(factor, axis=3))

    def bw(g):
        return (g.reshape(b, c, h, factor, w, factor).sum(axis=(3, 5)),)

    return record(out, (x,), bw, "upsample2d")

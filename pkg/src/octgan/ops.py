"""Differentiable NCHW operators: convolution, pooling, upsampling, batch norm.

Convolution uses the cross-correlation convention (no kernel flip) and is
implemented as im2col + matmul so the heavy lifting lands in BLAS.  The
transposed convolution is the exact adjoint of ``conv2d``: its forward pass
is conv2d's input-gradient computation with the same kernel.
"""

from __future__ import annotations

import numpy as np

from .errors import ShapeError
from .tensor import Tensor


# -- array-level primitives ----------------------------------------------------


def _pad2d(x: np.ndarray, p: int) -> np.ndarray:
    if p == 0:
        return x
    return np.pad(x, ((0, 0), (0, 0), (p, p), (p, p)))


def _unfold(xp: np.ndarray, kh: int, kw: int, stride: int):
    """Padded input (N,C,Hp,Wp) -> column matrix (N, C*kh*kw, Ho*Wo)."""
    v = np.lib.stride_tricks.sliding_window_view(xp, (kh, kw), axis=(2, 3))
    v = v[:, :, ::stride, ::stride]
    n, c, ho, wo = v.shape[:4]
    cols = v.transpose(0, 1, 4, 5, 2, 3).reshape(n, c * kh * kw, ho * wo)
    return np.ascontiguousarray(cols), ho, wo


def _fold(dcols: np.ndarray, c: int, hp: int, wp: int, kh: int, kw: int,
          stride: int, ho: int, wo: int) -> np.ndarray:
    """Adjoint of :func:`_unfold`: scatter-add columns back onto the canvas."""
    n = dcols.shape[0]
    d = dcols.reshape(n, c, kh, kw, ho, wo)
    out = np.zeros((n, c, hp, wp), dtype=dcols.dtype)
    for i in range(kh):
        for j in range(kw):
            out[:, :, i:i + stride * ho:stride, j:j + stride * wo:stride] += d[:, :, i, j]
    return out


def conv2d_forward(x: np.ndarray, w: np.ndarray, stride: int, padding: int):
    """Returns (y, cols); cols are kept for the weight gradient."""
    n = x.shape[0]
    co, ci, kh, kw = w.shape
    cols, ho, wo = _unfold(_pad2d(x, padding), kh, kw, stride)
    y = np.matmul(w.reshape(co, ci * kh * kw), cols)
    return y.reshape(n, co, ho, wo), cols


def conv2d_grad_weight(dy: np.ndarray, cols: np.ndarray, w_shape) -> np.ndarray:
    co, ci, kh, kw = w_shape
    n = dy.shape[0]
    dyf = dy.reshape(n, co, -1)
    dw = np.matmul(dyf, cols.transpose(0, 2, 1)).sum(axis=0)
    return dw.reshape(co, ci, kh, kw)


def conv2d_grad_input(dy: np.ndarray, w: np.ndarray, x_shape, stride: int, padding: int) -> np.ndarray:
    n, ci, h, wd = x_shape
    co = w.shape[0]
    kh, kw = w.shape[2], w.shape[3]
    ho, wo = dy.shape[2], dy.shape[3]
    dcols = np.matmul(w.reshape(co, -1).T, dy.reshape(n, co, ho * wo))
    dxp = _fold(dcols, ci, h + 2 * padding, wd + 2 * padding, kh, kw, stride, ho, wo)
    if padding:
        return dxp[:, :, padding:-padding, padding:-padding]
    return dxp


# -- graph-level operations ------------------------------------------------------


def conv2d(x: Tensor, w: Tensor, b: Tensor | None = None, stride: int = 1, padding: int = 0) -> Tensor:
    """2-D cross-correlation over NCHW input.

    Output spatial size is floor((H + 2*padding - kH)/stride) + 1 per axis.
    """
    if x.ndim != 4 or w.ndim != 4:
        raise ShapeError("conv2d expects 4-D input and kernel")
    n, ci, h, wd = x.shape
    co, wci, kh, kw = w.shape
    if wci != ci:
        raise ShapeError(f"kernel expects {wci} input channels, got {ci}")
    if kh > h + 2 * padding or kw > wd + 2 * padding:
        raise ShapeError(f"kernel {kh}x{kw} larger than padded input {h + 2 * padding}x{wd + 2 * padding}")
    if stride < 1:
        raise ValueError("stride must be >= 1")

    y, cols = conv2d_forward(x.data, w.data, stride, padding)
    if b is not None:
        if b.shape != (co,):
            raise ShapeError(f"bias must have shape ({co},), got {b.shape}")
        y = y + b.data.reshape(1, co, 1, 1)
        prev = (x, w, b)
    else:
        prev = (x, w)

    def backward(g):
        dx = conv2d_grad_input(g, w.data, x.shape, stride, padding) if x.requires_grad else None
        dw = conv2d_grad_weight(g, cols, w.shape) if w.requires_grad else None
        if b is not None:
            db = g.sum(axis=(0, 2, 3)) if b.requires_grad else None
            return dx, dw, db
        return dx, dw

    return Tensor._from_op(y, prev, "conv2d", backward)


def conv_transpose2d(x: Tensor, w: Tensor, b: Tensor | None = None,
                     stride: int = 1, padding: int = 0) -> Tensor:
    """Transposed 2-D convolution; kernel layout is (Cin, Cout, kH, kW).

    Output spatial size is (H - 1)*stride - 2*padding + kH per axis; the
    operation is the adjoint of :func:`conv2d` with the same kernel:
    <conv2d(a, K), b> == <a, conv_transpose2d(b, K)>.
    """
    if x.ndim != 4 or w.ndim != 4:
        raise ShapeError("conv_transpose2d expects 4-D input and kernel")
    n, ci, h, wd = x.shape
    wci, co, kh, kw = w.shape
    if wci != ci:
        raise ShapeError(f"kernel expects {wci} input channels, got {ci}")
    if stride < 1:
        raise ValueError("stride must be >= 1")
    ho = (h - 1) * stride - 2 * padding + kh
    wo = (wd - 1) * stride - 2 * padding + kw
    if ho < 1 or wo < 1:
        raise ShapeError(f"transposed conv produces empty output {ho}x{wo}")

    y = conv2d_grad_input(x.data, w.data, (n, co, ho, wo), stride, padding)
    if b is not None:
        if b.shape != (co,):
            raise ShapeError(f"bias must have shape ({co},), got {b.shape}")
        y = y + b.data.reshape(1, co, 1, 1)
        prev = (x, w, b)
    else:
        prev = (x, w)

    def backward(g):
        dx = dw = None
        if x.requires_grad or w.requires_grad:
            cols, _, _ = _unfold(_pad2d(g, padding), kh, kw, stride)
            if x.requires_grad:
                dx = np.matmul(w.data.reshape(ci, -1), cols).reshape(x.shape)
            if w.requires_grad:
                dw = conv2d_grad_weight(x.data, cols, (ci, co, kh, kw))
        if b is not None:
            db = g.sum(axis=(0, 2, 3)) if b.requires_grad else None
            return dx, dw, db
        return dx, dw

    return Tensor._from_op(y, prev, "conv_transpose2d", backward)


def avg_pool2d(x: Tensor, k: int = 2) -> Tensor:
    """Mean over non-overlapping k x k windows; H and W must divide by k."""
    n, c, h, w = x.shape
    if h % k or w % k:
        raise ShapeError(f"spatial dims {h}x{w} not divisible by pool size {k}")
    y = x.data.reshape(n, c, h // k, k, w // k, k).mean(axis=(3, 5))

    def backward(g):
        gx = np.broadcast_to(
            g[:, :, :, None, :, None], (n, c, h // k, k, w // k, k)
        ).reshape(n, c, h, w) / (k * k)
        return (gx.astype(g.dtype, copy=False),)

    return Tensor._from_op(y, (x,), "avg_pool2d", backward)


def upsample_nearest2d(x: Tensor, k: int = 2) -> Tensor:
    """Replicate each cell into a k x k block."""
    if k < 1:
        raise ValueError("scale factor must be >= 1")
    if k == 1:
        return Tensor._from_op(x.data, (x,), "upsample_nearest2d", lambda g: (g,))
    n, c, h, w = x.shape
    y = np.broadcast_to(
        x.data[:, :, :, None, :, None], (n, c, h, k, w, k)
    ).reshape(n, c, h * k, w * k)

    def backward(g):
        return (g.reshape(n, c, h, k, w, k).sum(axis=(3, 5)),)

    return Tensor._from_op(np.ascontiguousarray(y), (x,), "upsample_nearest2d", backward)


def batch_norm2d(x: Tensor, gamma: Tensor, beta: Tensor,
                 running_mean: np.ndarray, running_var: np.ndarray,
                 training: bool, momentum: float = 0.1, eps: float = 1e-5) -> Tensor:
    """Per-channel batch normalization with affine transform.

    Training mode normalizes by batch statistics, backpropagates through
    them, and updates the running estimates in place (the running variance
    uses the unbiased estimator).  Eval mode applies the running estimates.
    """
    n, c, h, w = x.shape
    m = n * h * w
    if training and m < 2:
        raise ShapeError("batch norm needs at least 2 values per channel in training mode")
    gshape = (1, c, 1, 1)

    if training:
        mu = x.data.mean(axis=(0, 2, 3))
        var = x.data.var(axis=(0, 2, 3))
        inv_std = 1.0 / np.sqrt(var + eps)
        xhat = (x.data - mu.reshape(gshape)) * inv_std.reshape(gshape)
        running_mean *= 1.0 - momentum
        running_mean += momentum * mu
        running_var *= 1.0 - momentum
        running_var += momentum * var * (m / (m - 1))

        def backward(g):
            dgamma = (g * xhat).sum(axis=(0, 2, 3)) if gamma.requires_grad else None
            dbeta = g.sum(axis=(0, 2, 3)) if beta.requires_grad else None
            dx = None
            if x.requires_grad:
                dxhat = g * gamma.data.reshape(gshape)
                s1 = dxhat.sum(axis=(0, 2, 3)).reshape(gshape)
                s2 = (dxhat * xhat).sum(axis=(0, 2, 3)).reshape(gshape)
                dx = (inv_std.reshape(gshape) / m) * (m * dxhat - s1 - xhat * s2)
            return dx, dgamma, dbeta

    else:
        inv_std = 1.0 / np.sqrt(running_var + eps)
        xhat = (x.data - running_mean.reshape(gshape)) * inv_std.reshape(gshape)

        def backward(g):
            dgamma = (g * xhat).sum(axis=(0, 2, 3)) if gamma.requires_grad else None
            dbeta = g.sum(axis=(0, 2, 3)) if beta.requires_grad else None
            dx = g * (gamma.data * inv_std).reshape(gshape) if x.requires_grad else None
            return dx, dgamma, dbeta

    y = xhat * gamma.data.reshape(gshape) + beta.data.reshape(gshape)
    return Tensor._from_op(y.astype(x.data.dtype, copy=False), (x, gamma, beta), "batch_norm2d", backward)


def channel_bias(x: Tensor, b: Tensor) -> Tensor:
    """Add a per-channel bias to an NCHW tensor."""
    c = x.shape[1]
    if b.shape != (c,):
        raise ShapeError(f"bias must have shape ({c},), got {b.shape}")

    def backward(g):
        return g, g.sum(axis=(0, 2, 3))

    return Tensor._from_op(x.data + b.data.reshape(1, c, 1, 1), (x, b), "channel_bias", backward)

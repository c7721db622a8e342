"""Convolution ops against brute-force loop oracles and adjoint identities."""

import numpy as np
import pytest

from octgan import ops
from octgan.errors import ShapeError
from octgan.tensor import Tensor, using_dtype


def conv2d_loop(x, w, stride, padding):
    """Quadruple-loop cross-correlation; the independent oracle."""
    n, cin, h, wd = x.shape
    cout, cin_w, kh, kw = w.shape
    assert cin == cin_w
    xp = np.pad(x, ((0, 0), (0, 0), (padding, padding), (padding, padding)))
    ho = (h + 2 * padding - kh) // stride + 1
    wo = (wd + 2 * padding - kw) // stride + 1
    out = np.zeros((n, cout, ho, wo), dtype=np.float64)
    for b in range(n):
        for co in range(cout):
            for i in range(ho):
                for j in range(wo):
                    patch = xp[b, :, i * stride:i * stride + kh, j * stride:j * stride + kw]
                    out[b, co, i, j] = np.sum(patch * w[co])
    return out


def conv_transpose2d_loop(x, w, stride, padding):
    """Scatter-add oracle for the transposed convolution."""
    n, cin, h, wd = x.shape
    cin_w, cout, kh, kw = w.shape
    assert cin == cin_w
    ho = (h - 1) * stride - 2 * padding + kh
    wo = (wd - 1) * stride - 2 * padding + kw
    out = np.zeros((n, cout, ho + 2 * padding, wo + 2 * padding), dtype=np.float64)
    for b in range(n):
        for ci in range(cin):
            for i in range(h):
                for j in range(wd):
                    out[b, :, i * stride:i * stride + kh, j * stride:j * stride + kw] += \
                        x[b, ci, i, j] * w[ci]
    if padding:
        out = out[:, :, padding:-padding, padding:-padding]
    return out


SHAPE_CASES = [
    # (n, cin, cout, size, k, stride, padding)
    (1, 1, 1, 5, 3, 1, 0),
    (2, 3, 4, 6, 3, 1, 1),
    (2, 3, 4, 8, 4, 2, 1),
    (1, 2, 5, 7, 5, 1, 2),
    (3, 4, 2, 8, 2, 2, 0),
    (2, 2, 3, 9, 3, 2, 1),
    (1, 3, 3, 4, 1, 1, 0),
]


@pytest.mark.parametrize("n,cin,cout,size,k,stride,padding", SHAPE_CASES)
def test_conv2d_matches_loop_oracle(rng64, n, cin, cout, size, k, stride, padding):
    x = rng64.normal((n, cin, size, size))
    w = rng64.normal((cout, cin, k, k))
    got = ops.conv2d(Tensor(x), Tensor(w), None, stride, padding)
    want = conv2d_loop(x, w, stride, padding)
    assert got.shape == want.shape
    assert np.allclose(got.data, want, atol=1e-12)


@pytest.mark.parametrize("n,cin,cout,size,k,stride,padding", SHAPE_CASES)
def test_conv_transpose2d_matches_scatter_oracle(rng64, n, cin, cout, size, k, stride, padding):
    x = rng64.normal((n, cin, size, size))
    w = rng64.normal((cin, cout, k, k))
    got = ops.conv_transpose2d(Tensor(x), Tensor(w), None, stride, padding)
    want = conv_transpose2d_loop(x, w, stride, padding)
    assert got.shape == want.shape
    assert np.allclose(got.data, want, atol=1e-12)


def test_conv2d_bias_adds_per_channel(rng64):
    x = rng64.normal((2, 3, 5, 5))
    w = rng64.normal((4, 3, 3, 3))
    b = rng64.normal((4,))
    no_bias = ops.conv2d(Tensor(x), Tensor(w), None, 1, 1)
    with_bias = ops.conv2d(Tensor(x), Tensor(w), Tensor(b), 1, 1)
    assert np.allclose(with_bias.data, no_bias.data + b[None, :, None, None])


def test_conv_and_transpose_are_adjoint(rng64):
    """<conv(x), y> == <x, conv_T(y)> with the same kernel array."""
    for stride, padding, k, size in ((1, 1, 3, 6), (2, 1, 4, 8), (1, 0, 3, 5)):
        x = rng64.normal((2, 3, size, size))
        w = rng64.normal((4, 3, k, k))
        y_shape = ops.conv2d(Tensor(x), Tensor(w), None, stride, padding).shape
        y = rng64.normal(y_shape)
        lhs = float(np.sum(ops.conv2d(Tensor(x), Tensor(w), None, stride, padding).data * y))
        # conv_transpose reads the same array with (cin, cout) = (cout_conv, cin_conv).
        rhs = float(np.sum(
            ops.conv_transpose2d(Tensor(y), Tensor(w), None, stride, padding).data * x))
        assert abs(lhs - rhs) / max(1.0, abs(lhs)) < 1e-12


def test_conv2d_gradients_match_finite_differences(rng64):
    x = rng64.normal((2, 2, 6, 6))
    w = rng64.normal((3, 2, 3, 3))
    b = rng64.normal((3,))
    xt, wt, bt = Tensor(x, requires_grad=True), Tensor(w, requires_grad=True), Tensor(b, requires_grad=True)
    (ops.conv2d(xt, wt, bt, 2, 1) ** 2).sum().backward()
    h = 1e-6

    def loss(xa, wa, ba):
        return float((ops.conv2d(Tensor(xa), Tensor(wa), Tensor(ba), 2, 1) ** 2).sum().data)

    for arr, grad, name in ((x, xt.grad, "x"), (w, wt.grad, "w"), (b, bt.grad, "b")):
        flat = arr.reshape(-1)
        for idx in (0, flat.size // 2, flat.size - 1):
            bump = arr.copy().reshape(-1)
            bump[idx] += h
            up = loss(bump.reshape(arr.shape) if name == "x" else x,
                      bump.reshape(arr.shape) if name == "w" else w,
                      bump.reshape(arr.shape) if name == "b" else b)
            bump[idx] -= 2 * h
            dn = loss(bump.reshape(arr.shape) if name == "x" else x,
                      bump.reshape(arr.shape) if name == "w" else w,
                      bump.reshape(arr.shape) if name == "b" else b)
            fd = (up - dn) / (2 * h)
            assert abs(fd - grad.reshape(-1)[idx]) < 1e-4 * max(1.0, abs(fd)), (name, idx)


def test_conv2d_channel_mismatch_raises(rng64):
    x = Tensor(rng64.normal((1, 3, 5, 5)))
    w = Tensor(rng64.normal((2, 4, 3, 3)))
    with pytest.raises(ShapeError):
        ops.conv2d(x, w, None, 1, 1)


def test_avg_pool2d_exact(rng64):
    x = rng64.normal((2, 3, 6, 6))
    got = ops.avg_pool2d(Tensor(x), 2).data
    want = x.reshape(2, 3, 3, 2, 3, 2).mean(axis=(3, 5))
    assert np.allclose(got, want)
    # Gradient spreads evenly over each window.
    xt = Tensor(x, requires_grad=True)
    ops.avg_pool2d(xt, 2).sum().backward()
    assert np.allclose(xt.grad, 0.25)


def test_upsample_nearest2d_exact(rng64):
    x = rng64.normal((2, 3, 3, 3))
    got = ops.upsample_nearest2d(Tensor(x), 2).data
    want = np.repeat(np.repeat(x, 2, axis=2), 2, axis=3)
    assert np.allclose(got, want)
    # Gradient of each input pixel sums its 2x2 replica block.
    xt = Tensor(x, requires_grad=True)
    ops.upsample_nearest2d(xt, 2).sum().backward()
    assert np.allclose(xt.grad, 4.0)


def test_pool_then_upsample_is_block_average(rng64):
    x = rng64.normal((1, 1, 4, 4))
    y = ops.upsample_nearest2d(ops.avg_pool2d(Tensor(x), 2), 2).data
    assert np.allclose(y[0, 0, :2, :2], x[0, 0, :2, :2].mean())


def test_batch_norm2d_train_mode_normalizes(rng64):
    x = rng64.normal((8, 3, 4, 4)) * 3.0 + 1.5
    gamma = Tensor(np.ones(3), requires_grad=True)
    beta = Tensor(np.zeros(3), requires_grad=True)
    rm, rv = np.zeros(3), np.ones(3)
    y = ops.batch_norm2d(Tensor(x), gamma, beta, rm, rv, training=True)
    mu = y.data.mean(axis=(0, 2, 3))
    sd = y.data.std(axis=(0, 2, 3))
    assert np.allclose(mu, 0.0, atol=1e-10)
    assert np.allclose(sd, 1.0, atol=1e-4)
    # Running stats moved toward the batch statistics.
    assert not np.allclose(rm, 0.0)
    assert not np.allclose(rv, 1.0)


def test_batch_norm2d_eval_uses_running_stats(rng64):
    x = rng64.normal((4, 2, 3, 3))
    gamma, beta = Tensor(np.ones(2)), Tensor(np.zeros(2))
    rm = np.array([1.0, -1.0])
    rv = np.array([4.0, 0.25])
    y = ops.batch_norm2d(Tensor(x), gamma, beta, rm, rv, training=False)
    want = (x - rm[None, :, None, None]) / np.sqrt(rv[None, :, None, None] + 1e-5)
    assert np.allclose(y.data, want)
    # Eval mode must not touch the running stats.
    assert np.allclose(rm, [1.0, -1.0]) and np.allclose(rv, [4.0, 0.25])


def test_batch_norm2d_running_update_is_unbiased(rng64):
    x = rng64.normal((6, 2, 2, 2))
    rm, rv = np.zeros(2), np.ones(2)
    ops.batch_norm2d(Tensor(x), Tensor(np.ones(2)), Tensor(np.zeros(2)),
                     rm, rv, training=True, momentum=1.0)
    m = 6 * 2 * 2
    per = x.transpose(1, 0, 2, 3).reshape(2, -1)
    assert np.allclose(rm, per.mean(axis=1))
    assert np.allclose(rv, per.var(axis=1) * m / (m - 1))

"""Finite-difference verification of every differentiable operation.

Each case builds a scalar-valued function, computes its derivative twice
-- once by reverse-mode backward, once by a central difference along a
random direction, all in 64-bit arithmetic -- and reports the worst
relative disagreement over many random instances.

Piecewise-linear activations are probed with inputs pushed away from
their kinks (|x| >= ``KINK_MARGIN``) so the finite difference samples a
region where the function is differentiable.
"""

from __future__ import annotations

import time

import numpy as np

from . import ops
from .losses import LOSS_NAMES, GanLoss
from .nn import BatchNorm2d, Conv2d, ConvTranspose2d, Linear, Module
from .octave import (DualBatchNorm2d, OctaveConv2d, OctaveConvTranspose2d,
                     OctaveFeature, SoftOctaveConv2d,
                     SoftOctaveConvTranspose2d, octave_merge, set_soft_betas)
from .rng import PortableRng
from .tensor import (Tensor, concat_channels, narrow_channels, no_grad,
                     using_dtype)

FD_STEP = 1e-5
DEFAULT_TOL = 1e-5
DEFAULT_INSTANCES = 20
KINK_MARGIN = 0.05


def _away_from_kinks(x: np.ndarray, margin: float = KINK_MARGIN) -> np.ndarray:
    """Push values out of the (-margin, margin) band around zero."""
    return x + np.where(x >= 0.0, margin, -margin)


def _rel_err(analytic: float, numeric: float) -> float:
    return abs(analytic - numeric) / max(1.0, abs(analytic), abs(numeric))


def _unit_directions(rng: PortableRng, arrays) -> list:
    dirs = [rng.normal(a.shape) for a in arrays]
    scale = np.sqrt(sum(float(np.sum(d * d)) for d in dirs))
    return [d / scale for d in dirs]


def check_function(fn, arrays, rng: PortableRng, step: float = FD_STEP) -> float:
    """Directional-derivative check for ``fn(*tensors) -> scalar Tensor``.

    Compares ``sum_i <grad_i, d_i>`` from one backward pass against
    ``(f(x + step*d) - f(x - step*d)) / (2*step)`` for a random unit
    direction ``d`` over all inputs jointly.
    """
    with using_dtype(np.float64):
        tensors = [Tensor(a, requires_grad=True) for a in arrays]
        fn(*tensors).backward()
        dirs = _unit_directions(rng, arrays)
        analytic = sum(float(np.sum(t.grad * d)) for t, d in zip(tensors, dirs))
        with no_grad():
            plus = fn(*[Tensor(a + step * d) for a, d in zip(arrays, dirs)])
            minus = fn(*[Tensor(a - step * d) for a, d in zip(arrays, dirs)])
        numeric = (plus.item() - minus.item()) / (2.0 * step)
    return _rel_err(analytic, numeric)


def check_module(module: Module, x: np.ndarray, apply, rng: PortableRng,
                 step: float = FD_STEP) -> float:
    """Directional-derivative check for a module's input and parameters.

    The backward gradient is read off the module's own parameter tensors;
    the finite difference perturbs the parameter arrays in place (restoring
    them afterwards), so the check covers exactly the graph a training step
    uses.
    """
    params = list(module.parameters())
    originals = [p.data.copy() for p in params]
    with using_dtype(np.float64):
        xt = Tensor(x, requires_grad=True)
        module.zero_grad()
        apply(module, xt).backward()
        arrays = [x] + originals
        dirs = _unit_directions(rng, arrays)
        grads = [xt.grad] + [p.grad for p in params]
        analytic = sum(float(np.sum(g * d)) for g, d in zip(grads, dirs))

        def eval_at(sign: float) -> float:
            for p, base, d in zip(params, originals, dirs[1:]):
                p.data = base + sign * step * d
            with no_grad():
                out = apply(module, Tensor(x + sign * step * dirs[0]))
            return out.item()

        try:
            numeric = (eval_at(1.0) - eval_at(-1.0)) / (2.0 * step)
        finally:
            for p, base in zip(params, originals):
                p.data = base
    return _rel_err(analytic, numeric)


class Case:
    """A named gradient check; ``make`` draws a fresh instance from rng."""

    def __init__(self, name: str, make):
        self.name = name
        self.make = make

    def run(self, rng: PortableRng, instances: int) -> float:
        worst = 0.0
        for _ in range(instances):
            worst = max(worst, self.make(rng))
        return worst


def _fn_case(name, fn, *shape_fns, transform=None):
    def make(rng):
        arrays = [sf(rng) for sf in shape_fns]
        if transform is not None:
            arrays = [transform(a) for a in arrays]
        return check_function(fn, arrays, rng)
    return Case(name, make)


def _mod_case(name, build):
    def make(rng):
        # Build inside the float64 context so parameters live at 64-bit.
        with using_dtype(np.float64):
            module, x, apply = build(rng)
            return check_module(module, x, apply, rng)
    return Case(name, make)


def _mean_of(fn):
    return lambda *ts: fn(*ts).mean()


def _octave_apply(module, xt):
    """Apply an octave layer to a plain tensor: split, run, merge, reduce."""
    c = xt.shape[1]
    high = narrow_channels(xt, 0, c - module.in_low)
    low = ops.avg_pool2d(narrow_channels(xt, c - module.in_low, c), 2)
    return (octave_merge(module(OctaveFeature(high, low))) ** 2).mean()


def _plain_octave_apply(module, xt):
    """Octave layer with alpha_in=0: feed the full-resolution tensor."""
    return octave_merge(module(OctaveFeature(xt, None))).mean()


def build_suite() -> list:
    """Every differentiable operation, one named case each."""

    def n(*shape):
        return lambda rng: rng.normal(shape)

    cases = [
        _fn_case("add", _mean_of(lambda a, b: a + b), n(4, 5), n(4, 5)),
        _fn_case("add_broadcast", _mean_of(lambda a, b: a + b), n(4, 3, 5), n(3, 1)),
        _fn_case("add_scalar", _mean_of(lambda a: a + 2.5), n(4, 5)),
        _fn_case("neg", _mean_of(lambda a: -a), n(4, 5)),
        _fn_case("sub", _mean_of(lambda a, b: a - b), n(4, 5), n(4, 5)),
        _fn_case("rsub_scalar", _mean_of(lambda a: 1.0 - a), n(4, 5)),
        _fn_case("mul", _mean_of(lambda a, b: a * b), n(4, 5), n(4, 5)),
        _fn_case("mul_broadcast", _mean_of(lambda a, b: a * b), n(2, 3, 4, 4), n(1, 3, 1, 1)),
        _fn_case("mul_scalar", _mean_of(lambda a: a * 0.75), n(4, 5)),
        _fn_case("div", _mean_of(lambda a, b: a / b), n(4, 5),
                 lambda rng: _away_from_kinks(rng.normal((4, 5)), 0.5)),
        _fn_case("div_scalar", _mean_of(lambda a: a / 3.0), n(4, 5)),
        _fn_case("pow_square", _mean_of(lambda a: a ** 2), n(4, 5)),
        _fn_case("pow_cube", _mean_of(lambda a: a ** 3), n(4, 5)),
        _fn_case("matmul", _mean_of(lambda a, b: a @ b), n(4, 6), n(6, 3)),
        _fn_case("transpose2d", _mean_of(lambda a, b: a.transpose2d() @ b), n(6, 4), n(6, 3)),
        _fn_case("sum", lambda a: a.sum(), n(4, 5)),
        _fn_case("mean", lambda a: a.mean(), n(4, 5)),
        _fn_case("reshape", _mean_of(lambda a, b: a.reshape(2, 10) * b), n(4, 5), n(2, 10)),
        _fn_case("narrow_channels", _mean_of(lambda a: narrow_channels(a, 1, 4) ** 2),
                 n(2, 6, 3, 3)),
        _fn_case("concat_channels", _mean_of(lambda a, b: concat_channels(a, b) ** 2),
                 n(2, 3, 4, 4), n(2, 5, 4, 4)),
        _fn_case("relu", _mean_of(lambda a: a.relu()), n(4, 5), transform=_away_from_kinks),
        _fn_case("leaky_relu", _mean_of(lambda a: a.leaky_relu(0.2)), n(4, 5),
                 transform=_away_from_kinks),
        _fn_case("tanh", _mean_of(lambda a: a.tanh()), n(4, 5)),
        _fn_case("sigmoid", _mean_of(lambda a: a.sigmoid()), n(4, 5)),
        _fn_case("softplus", _mean_of(lambda a: a.softplus()), n(4, 5)),
        _fn_case("conv2d_s1p1", _mean_of(lambda x, w, b: ops.conv2d(x, w, b, 1, 1) ** 2),
                 n(2, 3, 6, 6), n(4, 3, 3, 3), n(4)),
        _fn_case("conv2d_s2p1_nobias",
                 _mean_of(lambda x, w: ops.conv2d(x, w, None, 2, 1) ** 2),
                 n(2, 3, 8, 8), n(4, 3, 4, 4)),
        _fn_case("conv2d_s1p0", _mean_of(lambda x, w: ops.conv2d(x, w, None, 1, 0) ** 2),
                 n(2, 2, 5, 5), n(3, 2, 3, 3)),
        _fn_case("conv_transpose2d_s2p1",
                 _mean_of(lambda x, w, b: ops.conv_transpose2d(x, w, b, 2, 1) ** 2),
                 n(2, 3, 4, 4), n(3, 4, 4, 4), n(4)),
        _fn_case("conv_transpose2d_s1p1",
                 _mean_of(lambda x, w: ops.conv_transpose2d(x, w, None, 1, 1) ** 2),
                 n(2, 3, 5, 5), n(3, 4, 3, 3)),
        _fn_case("avg_pool2d", _mean_of(lambda x: ops.avg_pool2d(x, 2) ** 2), n(2, 3, 6, 6)),
        _fn_case("upsample_nearest2d",
                 _mean_of(lambda x: ops.upsample_nearest2d(x, 2) ** 2), n(2, 3, 4, 4)),
        _fn_case("channel_bias", _mean_of(lambda x, b: ops.channel_bias(x, b) ** 2),
                 n(2, 4, 3, 3), n(4)),
        _fn_case("batch_norm2d",
                 _mean_of(lambda x, g, b: ops.batch_norm2d(
                     x, g, b, np.zeros(3), np.ones(3), training=True) ** 2),
                 n(4, 3, 5, 5), n(3), n(3)),
    ]

    def linear_build(rng):
        m = Linear(6, 4, rng)
        return m, rng.normal((3, 6)), lambda mod, x: mod(x).mean()

    def bn_module_build(rng):
        m = BatchNorm2d(3, rng)
        m.train()
        return m, rng.normal((4, 3, 5, 5)), lambda mod, x: (mod(x) ** 2).mean()

    def conv_module_build(rng):
        m = Conv2d(3, 4, 3, rng, stride=1, padding=1)
        return m, rng.normal((2, 3, 6, 6)), lambda mod, x: (mod(x) ** 2).mean()

    def convt_module_build(rng):
        m = ConvTranspose2d(3, 4, 4, rng, stride=2, padding=1)
        return m, rng.normal((2, 3, 4, 4)), lambda mod, x: (mod(x) ** 2).mean()

    def octave_s1_build(rng):
        m = OctaveConv2d(8, 6, 3, rng, alpha_in=0.5, alpha_out=0.5, stride=1, padding=1)
        return m, rng.normal((2, 8, 8, 8)), _octave_apply

    def octave_s2_build(rng):
        m = OctaveConv2d(8, 6, 4, rng, alpha_in=0.5, alpha_out=0.5, stride=2, padding=1)
        return m, rng.normal((2, 8, 8, 8)), _octave_apply

    def octave_first_build(rng):
        m = OctaveConv2d(3, 6, 4, rng, alpha_in=0.0, alpha_out=0.5, stride=2, padding=1)
        return m, rng.normal((2, 3, 8, 8)), lambda mod, x: _plain_octave_apply(mod, x)

    def octave_t_build(rng):
        m = OctaveConvTranspose2d(8, 6, 4, rng, alpha_in=0.5, alpha_out=0.5,
                                  stride=2, padding=1)
        return m, rng.normal((2, 8, 8, 8)), _octave_apply

    def soft_build(rng):
        m = SoftOctaveConv2d(8, 6, 4, rng, stride=2, padding=1)
        set_soft_betas(m, 0.75, 0.5)
        return m, rng.normal((2, 8, 8, 8)), _octave_apply

    def soft_t_build(rng):
        m = SoftOctaveConvTranspose2d(8, 6, 4, rng, stride=2, padding=1)
        set_soft_betas(m, 0.25, 1.5)
        return m, rng.normal((2, 8, 8, 8)), _octave_apply

    def dual_bn_build(rng):
        m = DualBatchNorm2d(4, 4, rng)
        m.train()

        def apply(mod, x):
            feat = OctaveFeature(narrow_channels(x, 0, 4),
                                 ops.avg_pool2d(narrow_channels(x, 4, 8), 2))
            return (octave_merge(mod(feat)) ** 2).mean()
        return m, rng.normal((3, 8, 6, 6)), apply

    cases += [
        _mod_case("linear", linear_build),
        _mod_case("batch_norm_module", bn_module_build),
        _mod_case("conv_module", conv_module_build),
        _mod_case("conv_transpose_module", convt_module_build),
        _mod_case("octave_conv_s1", octave_s1_build),
        _mod_case("octave_conv_s2", octave_s2_build),
        _mod_case("octave_conv_first", octave_first_build),
        _mod_case("octave_conv_transpose", octave_t_build),
        _mod_case("soft_octave_conv", soft_build),
        _mod_case("soft_octave_conv_transpose", soft_t_build),
        _mod_case("dual_batch_norm", dual_bn_build),
    ]

    for name in LOSS_NAMES:
        loss = GanLoss(name)
        cases.append(_fn_case(f"d_loss_{name}", loss.d_loss, n(8, 1), n(8, 1)))
        cases.append(_fn_case(f"g_loss_{name}", loss.g_loss, n(8, 1)))
    return cases


def run_suite(instances: int = DEFAULT_INSTANCES, tol: float = DEFAULT_TOL,
              seed: int = 0, report=None) -> list[tuple[str, float, bool]]:
    """Run every case; returns (name, max relative error, passed) triples."""
    results = []
    for case in build_suite():
        rng = PortableRng.derived(seed, "gradcheck-" + case.name)
        err = case.run(rng, instances)
        results.append((case.name, err, err < tol))
        if report is not None:
            report(results[-1])
    return results


def main_report(instances: int = DEFAULT_INSTANCES, tol: float = DEFAULT_TOL,
                seed: int = 0, out=print) -> bool:
    """Print one line per case; returns overall pass/fail."""
    t0 = time.perf_counter()
    ok = True
    for name, err, passed in run_suite(instances, tol, seed):
        ok &= passed
        out(f"{'PASS' if passed else 'FAIL'}  {name:28s} max_rel_err={err:.3e}")
    out(f"{'OK' if ok else 'FAILED'} in {time.perf_counter() - t0:.1f}s "
        f"({instances} instances/case, tol={tol:g})")
    return ok

"""Octave and soft octave convolutions.

An octave feature map stores a high-frequency branch at full resolution and
a low-frequency branch at half resolution.  A convolution over it uses four
kernel banks (high->high, low->high, high->low, low->low); cross-branch
paths move between resolutions with average pooling (down) and nearest
upsampling (up).  The channel split is controlled by alpha, the fraction of
channels assigned to the low branch; alpha = 0 reduces every layer here to
its single-branch counterpart, bit for bit.

The soft variant keeps a fixed alpha = 0.5 split and instead scales the two
output branches by scalars (beta_low, beta_high) that a
:class:`BetaSchedule` moves over the course of training, so the network
fades between frequency regimes instead of hard-switching.

Module-level ``counters`` record which code paths ran; tests use them to
prove branch coverage, and ``reset_counters`` clears them.
"""

from __future__ import annotations

import numpy as np

from . import ops
from .errors import ConfigError, ShapeError
from .nn import BatchNorm2d, Module, Parameter, _normal_param
from .rng import PortableRng
from .tensor import Tensor, concat_channels, get_default_dtype

counters: dict[str, int] = {}


def _count(key: str) -> None:
    counters[key] = counters.get(key, 0) + 1


def reset_counters() -> None:
    counters.clear()


def split_channels(channels: int, alpha: float) -> tuple[int, int]:
    """Split a channel count into (high, low) with low ~= alpha * channels.

    Rounding is half-up so the split is stable across platforms.  alpha = 0
    puts everything in the high branch, alpha = 1 everything in the low
    branch; other values always leave both branches non-empty when possible.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ConfigError(f"alpha must lie in [0, 1], got {alpha}")
    low = int(np.floor(alpha * channels + 0.5))
    low = min(max(low, 0), channels)
    return channels - low, low


class OctaveFeature:
    """A (high, low) pair of NCHW tensors; either branch may be None.

    The low branch lives at exactly half the spatial resolution of the high
    branch.  Both branches share the batch dimension.
    """

    __slots__ = ("high", "low")

    def __init__(self, high: Tensor | None, low: Tensor | None):
        if high is None and low is None:
            raise ShapeError("octave feature needs at least one branch")
        if high is not None and low is not None:
            if high.shape[0] != low.shape[0]:
                raise ShapeError("octave branches disagree on batch size")
            if (high.shape[2] != 2 * low.shape[2]) or (high.shape[3] != 2 * low.shape[3]):
                raise ShapeError(
                    f"low branch must be half resolution: high {high.shape[2:]} vs low {low.shape[2:]}")
        self.high = high
        self.low = low

    @property
    def channels(self) -> int:
        c = 0
        if self.high is not None:
            c += self.high.shape[1]
        if self.low is not None:
            c += self.low.shape[1]
        return c

    def map(self, fn) -> "OctaveFeature":
        """Apply ``fn`` to each present branch."""
        return OctaveFeature(
            fn(self.high) if self.high is not None else None,
            fn(self.low) if self.low is not None else None,
        )


def as_octave(x: Tensor) -> OctaveFeature:
    """Wrap a plain tensor as an all-high octave feature."""
    return OctaveFeature(x, None)


def octave_split(x: Tensor, alpha: float) -> OctaveFeature:
    """Split a plain tensor into octave branches by channel range.

    The first (1 - alpha) fraction of channels stays at full resolution; the
    rest is average-pooled to half resolution.  Spatial dims must be even
    when a low branch is produced.
    """
    c = x.shape[1]
    c_high, c_low = split_channels(c, alpha)
    if c_low == 0:
        return OctaveFeature(x, None)
    if c_high == 0:
        return OctaveFeature(None, ops.avg_pool2d(x, 2))
    from .tensor import narrow_channels
    high = narrow_channels(x, 0, c_high)
    low = ops.avg_pool2d(narrow_channels(x, c_high, c), 2)
    return OctaveFeature(high, low)


def octave_merge(feat: OctaveFeature) -> Tensor:
    """Collapse an octave feature to a plain tensor at full resolution.

    The low branch is nearest-upsampled and concatenated after the high
    channels; a single-branch feature passes through (low-only is upsampled).
    """
    if feat.low is None:
        return feat.high
    if feat.high is None:
        return ops.upsample_nearest2d(feat.low, 2)
    return concat_channels(feat.high, ops.upsample_nearest2d(feat.low, 2))


def octave_relu(feat: OctaveFeature) -> OctaveFeature:
    return feat.map(lambda t: t.relu())


def octave_leaky_relu(feat: OctaveFeature, slope: float = 0.2) -> OctaveFeature:
    return feat.map(lambda t: t.leaky_relu(slope))


def _maybe_add(a: Tensor | None, b: Tensor | None) -> Tensor | None:
    if a is None:
        return b
    if b is None:
        return a
    return a + b


class _OctaveBase(Module):
    """Shared bank construction / bias / beta logic for octave conv layers.

    Kernel banks exist only for branch pairs whose input and output sides
    both have channels; banks are created in a fixed order (hh, lh, hl, ll)
    so equal-seeded initialization is reproducible.  ``transposed`` flips the
    per-bank kernel layout to (in, out, k, k).
    """

    transposed = False

    def __init__(self, in_channels: int, out_channels: int, kernel_size: int,
                 rng: PortableRng, alpha_in: float, alpha_out: float,
                 stride: int, padding: int, bias: bool):
        super().__init__()
        if stride not in (1, 2):
            raise ConfigError(f"octave convolution supports stride 1 or 2, got {stride}")
        self.in_high, self.in_low = split_channels(in_channels, alpha_in)
        self.out_high, self.out_low = split_channels(out_channels, alpha_out)
        self.kernel_size = kernel_size
        self.stride = stride
        self.padding = padding
        self.alpha_in = alpha_in
        self.alpha_out = alpha_out

        def bank(cin: int, cout: int) -> Parameter | None:
            if cin == 0 or cout == 0:
                return None
            shape = (cin, cout, kernel_size, kernel_size) if self.transposed \
                else (cout, cin, kernel_size, kernel_size)
            return _normal_param(rng, shape, 0.02)

        self.weight_hh = bank(self.in_high, self.out_high)
        self.weight_lh = bank(self.in_low, self.out_high)
        self.weight_hl = bank(self.in_high, self.out_low)
        self.weight_ll = bank(self.in_low, self.out_low)
        if bias:
            dt = get_default_dtype()
            self.bias_high = Parameter(np.zeros(self.out_high, dtype=dt)) if self.out_high else None
            self.bias_low = Parameter(np.zeros(self.out_low, dtype=dt)) if self.out_low else None
        else:
            self.bias_high = None
            self.bias_low = None

    def __setattr__(self, name, value):
        # Allow "absent bank" slots to hold None without registration noise.
        if value is None:
            object.__setattr__(self, name, value)
        else:
            super().__setattr__(name, value)

    def _check_input(self, feat: OctaveFeature) -> None:
        got_high = feat.high.shape[1] if feat.high is not None else 0
        got_low = feat.low.shape[1] if feat.low is not None else 0
        if got_high != self.in_high or got_low != self.in_low:
            raise ShapeError(
                f"octave layer expects (high={self.in_high}, low={self.in_low}) input channels, "
                f"got (high={got_high}, low={got_low})")

    def _finish(self, y_high: Tensor | None, y_low: Tensor | None) -> OctaveFeature:
        if y_high is not None and self.bias_high is not None:
            y_high = ops.channel_bias(y_high, self.bias_high)
        if y_low is not None and self.bias_low is not None:
            y_low = ops.channel_bias(y_low, self.bias_low)
        return OctaveFeature(y_high, y_low)


class OctaveConv2d(_OctaveBase):
    """Octave convolution over an :class:`OctaveFeature`.

    Path rules (stride 1): high->high is a plain convolution; low->high is
    convolved at low resolution then upsampled; high->low is average-pooled
    then convolved; low->low is a plain convolution at low resolution.  At
    stride 2 every path convolves with stride 2 directly, with low->high
    upsampled *before* the convolution so the arithmetic stays exact for
    even kernels.  Stride-1 use assumes a size-preserving (odd kernel,
    padding = (k-1)/2) configuration; the branch-shape invariant raises
    otherwise.
    """

    def __init__(self, in_channels: int, out_channels: int, kernel_size: int,
                 rng: PortableRng, alpha_in: float = 0.5, alpha_out: float = 0.5,
                 stride: int = 1, padding: int = 0, bias: bool = True):
        super().__init__(in_channels, out_channels, kernel_size, rng,
                         alpha_in, alpha_out, stride, padding, bias)

    def forward(self, feat: OctaveFeature) -> OctaveFeature:
        self._check_input(feat)
        s, p = self.stride, self.padding
        high, low = feat.high, feat.low

        y_hh = y_lh = y_hl = y_ll = None
        if self.weight_hh is not None:
            y_hh = ops.conv2d(high, self.weight_hh, None, s, p)
            _count("octave_conv.hh")
        if self.weight_lh is not None:
            if s == 1:
                y_lh = ops.upsample_nearest2d(ops.conv2d(low, self.weight_lh, None, 1, p), 2)
            else:
                y_lh = ops.conv2d(ops.upsample_nearest2d(low, 2), self.weight_lh, None, s, p)
            _count("octave_conv.lh")
        if self.weight_hl is not None:
            y_hl = ops.conv2d(ops.avg_pool2d(high, 2), self.weight_hl, None, s, p)
            _count("octave_conv.hl")
        if self.weight_ll is not None:
            y_ll = ops.conv2d(low, self.weight_ll, None, s, p)
            _count("octave_conv.ll")

        return self._finish(_maybe_add(y_hh, y_lh), _maybe_add(y_hl, y_ll))


class OctaveConvTranspose2d(_OctaveBase):
    """Transposed octave convolution (the upsampling mirror of
    :class:`OctaveConv2d`), for generator blocks.

    Each bank applies a transposed convolution; cross-branch resolution
    moves mirror the forward rules, so at stride 2 the output high branch
    has twice the input high resolution and the low branch matches the
    input high resolution.
    """

    transposed = True

    def __init__(self, in_channels: int, out_channels: int, kernel_size: int,
                 rng: PortableRng, alpha_in: float = 0.5, alpha_out: float = 0.5,
                 stride: int = 1, padding: int = 0, bias: bool = True):
        super().__init__(in_channels, out_channels, kernel_size, rng,
                         alpha_in, alpha_out, stride, padding, bias)

    def forward(self, feat: OctaveFeature) -> OctaveFeature:
        self._check_input(feat)
        s, p = self.stride, self.padding
        high, low = feat.high, feat.low

        y_hh = y_lh = y_hl = y_ll = None
        if self.weight_hh is not None:
            y_hh = ops.conv_transpose2d(high, self.weight_hh, None, s, p)
            _count("octave_conv_transpose.hh")
        if self.weight_lh is not None:
            t = ops.conv_transpose2d(low, self.weight_lh, None, s, p)
            y_lh = ops.upsample_nearest2d(t, 2)
            _count("octave_conv_transpose.lh")
        if self.weight_hl is not None:
            y_hl = ops.conv_transpose2d(ops.avg_pool2d(high, 2), self.weight_hl, None, s, p)
            _count("octave_conv_transpose.hl")
        if self.weight_ll is not None:
            y_ll = ops.conv_transpose2d(low, self.weight_ll, None, s, p)
            _count("octave_conv_transpose.ll")

        return self._finish(_maybe_add(y_hh, y_lh), _maybe_add(y_hl, y_ll))


class _SoftScaling:
    """Mixin applying (beta_low, beta_high) output scaling.

    A branch whose beta is exactly 1.0 is passed through untouched -- not
    multiplied by 1 -- so a soft layer at the schedule's identity point is
    bit-identical to its plain octave counterpart.
    """

    beta_high: float
    beta_low: float

    def set_betas(self, beta_low: float, beta_high: float) -> None:
        if beta_low < 0 or beta_high < 0:
            raise ConfigError("beta multipliers must be non-negative")
        object.__setattr__(self, "beta_low", float(beta_low))
        object.__setattr__(self, "beta_high", float(beta_high))

    def _apply_betas(self, feat: OctaveFeature) -> OctaveFeature:
        high, low = feat.high, feat.low
        if high is not None:
            if self.beta_high == 1.0:
                _count("soft_scale.skip_high")
            else:
                high = high * self.beta_high
                _count("soft_scale.high")
        if low is not None:
            if self.beta_low == 1.0:
                _count("soft_scale.skip_low")
            else:
                low = low * self.beta_low
                _count("soft_scale.low")
        return OctaveFeature(high, low)


class SoftOctaveConv2d(OctaveConv2d, _SoftScaling):
    """Octave convolution with a fixed alpha = 0.5 split and beta scaling."""

    def __init__(self, in_channels: int, out_channels: int, kernel_size: int,
                 rng: PortableRng, stride: int = 1, padding: int = 0,
                 bias: bool = True, first: bool = False):
        alpha_in = 0.0 if first else 0.5
        super().__init__(in_channels, out_channels, kernel_size, rng,
                         alpha_in=alpha_in, alpha_out=0.5,
                         stride=stride, padding=padding, bias=bias)
        self.set_betas(1.0, 1.0)

    def forward(self, feat: OctaveFeature) -> OctaveFeature:
        return self._apply_betas(super().forward(feat))


class SoftOctaveConvTranspose2d(OctaveConvTranspose2d, _SoftScaling):
    """Transposed octave convolution with alpha = 0.5 and beta scaling."""

    def __init__(self, in_channels: int, out_channels: int, kernel_size: int,
                 rng: PortableRng, stride: int = 1, padding: int = 0,
                 bias: bool = True, first: bool = False):
        alpha_in = 0.0 if first else 0.5
        super().__init__(in_channels, out_channels, kernel_size, rng,
                         alpha_in=alpha_in, alpha_out=0.5,
                         stride=stride, padding=padding, bias=bias)
        self.set_betas(1.0, 1.0)

    def forward(self, feat: OctaveFeature) -> OctaveFeature:
        return self._apply_betas(super().forward(feat))


def set_soft_betas(module: Module, beta_low: float, beta_high: float) -> int:
    """Set beta multipliers on every soft octave layer under ``module``.

    Returns the number of layers updated.
    """
    n = 0
    for m in module.modules():
        if isinstance(m, _SoftScaling):
            m.set_betas(beta_low, beta_high)
            n += 1
    return n


class DualBatchNorm2d(Module):
    """Independent batch normalization for each octave branch.

    The two branches see different value distributions (the low branch is an
    average of the high), so sharing statistics would couple them; each
    branch keeps its own running estimates and affine parameters.
    """

    def __init__(self, high_channels: int, low_channels: int,
                 rng: PortableRng | None = None, momentum: float = 0.1, eps: float = 1e-5):
        super().__init__()
        self.bn_high = BatchNorm2d(high_channels, rng, momentum, eps) if high_channels else None
        self.bn_low = BatchNorm2d(low_channels, rng, momentum, eps) if low_channels else None

    def __setattr__(self, name, value):
        if value is None:
            object.__setattr__(self, name, value)
        else:
            super().__setattr__(name, value)

    def forward(self, feat: OctaveFeature) -> OctaveFeature:
        high = self.bn_high(feat.high) if feat.high is not None else None
        low = self.bn_low(feat.low) if feat.low is not None else None
        return OctaveFeature(high, low)


# -- beta schedules ----------------------------------------------------------------


class BetaSchedule:
    """Piecewise-linear trajectory of (beta_low, beta_high) over training.

    ``points`` is a sorted list of (t, beta_low, beta_high) with t in [0, 1],
    starting at t = 0 and ending at t = 1; evaluation interpolates linearly
    and clips t into [0, 1].  The named presets are:

    - ``constant``:    both betas stay at 1 (plain soft octave behaviour).
    - ``ramp``:        low fades 1 -> 0 while high rises 0 -> 1.
    - ``combination``: both branches stay active, low-weighted early and
      high-weighted late, crossing at t = 0.5.
    - ``coupled``:     beta_high rises 0 -> 1 with beta_low = 1 - beta_high
      enforced exactly at every point.
    """

    PRESETS = {
        "constant": [(0.0, 1.0, 1.0), (1.0, 1.0, 1.0)],
        "ramp": [(0.0, 1.0, 0.0), (1.0, 0.0, 1.0)],
        "combination": [(0.0, 1.0, 0.25), (0.5, 0.75, 0.75), (1.0, 0.25, 1.0)],
    }

    def __init__(self, points, coupled: bool = False, name: str = "custom"):
        pts = [(float(t), float(bl), float(bh)) for t, bl, bh in points]
        if len(pts) < 2:
            raise ConfigError("beta schedule needs at least two control points")
        if pts[0][0] != 0.0 or pts[-1][0] != 1.0:
            raise ConfigError("beta schedule must start at t=0 and end at t=1")
        for (t0, _, _), (t1, _, _) in zip(pts, pts[1:]):
            if t1 <= t0:
                raise ConfigError("beta schedule times must be strictly increasing")
        for t, bl, bh in pts:
            if bl < 0 or bh < 0:
                raise ConfigError("beta values must be non-negative")
        self.points = pts
        self.coupled = coupled
        self.name = name

    @classmethod
    def from_name(cls, name: str) -> "BetaSchedule":
        if name == "coupled":
            return cls([(0.0, 1.0, 0.0), (1.0, 0.0, 1.0)], coupled=True, name=name)
        if name in cls.PRESETS:
            return cls(cls.PRESETS[name], name=name)
        raise ConfigError(
            f"unknown beta schedule '{name}' (choose from constant, ramp, combination, coupled)")

    def evaluate(self, t: float) -> tuple[float, float]:
        t = min(max(float(t), 0.0), 1.0)
        pts = self.points
        for (t0, bl0, bh0), (t1, bl1, bh1) in zip(pts, pts[1:]):
            if t <= t1:
                w = (t - t0) / (t1 - t0)
                bl = bl0 + w * (bl1 - bl0)
                bh = bh0 + w * (bh1 - bh0)
                break
        else:  # pragma: no cover - unreachable given validation
            bl, bh = pts[-1][1], pts[-1][2]
        if self.coupled:
            bl = 1.0 - bh
        return bl, bh

    def at_epoch(self, epoch: int, total_epochs: int) -> tuple[float, float]:
        """Evaluate at the epoch's training progress.

        Progress runs 0 at the first epoch to exactly 1 at the last, so a
        run traverses the schedule end to end inclusive of both endpoints.
        """
        if total_epochs <= 1:
            return self.evaluate(0.0)
        return self.evaluate(epoch / (total_epochs - 1))

"""Octave and soft octave layers: degeneracy, parity, schedules, counters."""

import numpy as np
import pytest

from octgan import ops
from octgan.errors import ConfigError, ShapeError
from octgan.nn import Conv2d, ConvTranspose2d
from octgan.octave import (BetaSchedule, DualBatchNorm2d, OctaveConv2d,
                           OctaveConvTranspose2d, OctaveFeature,
                           SoftOctaveConv2d, SoftOctaveConvTranspose2d,
                           as_octave, counters, octave_merge, octave_split,
                           reset_counters, set_soft_betas, split_channels)
from octgan.rng import PortableRng
from octgan.tensor import Tensor, using_dtype


def feature(rng, n, c_high, c_low, size):
    high = Tensor(rng.normal((n, c_high, size, size))) if c_high else None
    low = Tensor(rng.normal((n, c_low, size // 2, size // 2))) if c_low else None
    return OctaveFeature(high, low)


def test_split_channels_rounding():
    assert split_channels(16, 0.5) == (8, 8)
    assert split_channels(16, 0.0) == (16, 0)
    assert split_channels(16, 1.0) == (0, 16)
    assert split_channels(7, 0.5) == (3, 4)     # low gets floor(3.5 + 0.5)
    assert split_channels(5, 0.25) == (4, 1)
    with pytest.raises(ConfigError):
        split_channels(8, -0.1)
    with pytest.raises(ConfigError):
        split_channels(8, 1.5)


def test_octave_feature_validation(rng):
    with pytest.raises(ShapeError):
        OctaveFeature(Tensor(rng.normal((1, 2, 8, 8))),
                      Tensor(rng.normal((1, 2, 3, 3))))  # not half resolution
    f = feature(rng, 2, 3, 5, 8)
    assert f.channels == 8


def test_split_then_merge_roundtrip(rng):
    x = Tensor(rng.normal((2, 6, 8, 8)))
    merged = octave_merge(octave_split(x, 0.5))
    # The low branch went through pool + upsample, so only the high part
    # survives exactly; shapes and channel count must round-trip.
    assert merged.shape == x.shape
    assert np.array_equal(merged.data[:, :3], x.data[:, :3])


@pytest.mark.parametrize("cls,kind", [(OctaveConv2d, "conv"),
                                      (OctaveConvTranspose2d, "convT")])
@pytest.mark.parametrize("stride", [1, 2])
def test_alpha_zero_degenerates_to_plain(rng64, cls, kind, stride):
    """alpha_in = alpha_out = 0 must reproduce the plain layer bit-for-bit.

    Both layers draw weights from identical generator states, so outputs
    agree to 1e-12 (in practice exactly)."""
    k = 4 if stride == 2 else 3
    pad = 1
    x = rng64.normal((2, 3, 8, 8))
    seed_rng = PortableRng(77)
    if kind == "conv":
        plain = Conv2d(3, 5, k, PortableRng(77), stride=stride, padding=pad)
        oct_layer = OctaveConv2d(3, 5, k, PortableRng(77), alpha_in=0.0,
                                 alpha_out=0.0, stride=stride, padding=pad)
        want = plain(Tensor(x))
        got = oct_layer(OctaveFeature(Tensor(x), None))
    else:
        plain = ConvTranspose2d(3, 5, k, PortableRng(77), stride=stride, padding=pad)
        oct_layer = OctaveConvTranspose2d(3, 5, k, PortableRng(77), alpha_in=0.0,
                                          alpha_out=0.0, stride=stride, padding=pad)
        want = plain(Tensor(x))
        got = oct_layer(OctaveFeature(Tensor(x), None))
    assert got.low is None
    assert np.max(np.abs(got.high.data - want.data)) <= 1e-12


def test_parameter_parity_with_plain_conv(rng):
    """The four banks hold exactly k^2*cin*cout weights, same as one conv."""
    for alpha in (0.0, 0.25, 0.5):
        layer = OctaveConv2d(8, 12, 3, PortableRng(1), alpha_in=alpha,
                             alpha_out=alpha, stride=1, padding=1, bias=False)
        total = sum(p.data.size for p in layer.parameters())
        assert total == 3 * 3 * 8 * 12
    layer = OctaveConvTranspose2d(8, 12, 4, PortableRng(1), alpha_in=0.5,
                                  alpha_out=0.5, stride=2, padding=1, bias=False)
    assert sum(p.data.size for p in layer.parameters()) == 4 * 4 * 8 * 12


@pytest.mark.parametrize("stride", [1, 2])
def test_octave_conv_output_shapes(rng, stride):
    layer = OctaveConv2d(8, 6, 4 if stride == 2 else 3, PortableRng(3),
                         alpha_in=0.5, alpha_out=0.5, stride=stride, padding=1)
    f = feature(rng, 2, 4, 4, 16)
    out = layer(f)
    s = 16 // stride
    assert out.high.shape == (2, 3, s, s)
    assert out.low.shape == (2, 3, s // 2, s // 2)


@pytest.mark.parametrize("stride", [1, 2])
def test_octave_transpose_output_shapes(rng, stride):
    layer = OctaveConvTranspose2d(8, 6, 4 if stride == 2 else 3, PortableRng(3),
                                  alpha_in=0.5, alpha_out=0.5, stride=stride, padding=1)
    f = feature(rng, 2, 4, 4, 8)
    out = layer(f)
    s = 8 * stride
    assert out.high.shape == (2, 3, s, s)
    assert out.low.shape == (2, 3, s // 2, s // 2)


def test_soft_octave_beta_one_is_bit_identical(rng64):
    """beta = (1, 1) must leave outputs bit-equal to the unscaled layer."""
    x = rng64.normal((2, 8, 8, 8))
    f_in = OctaveFeature(Tensor(x[:, :4]),
                         ops.avg_pool2d(Tensor(x[:, 4:]), 2))
    base = OctaveConv2d(8, 6, 4, PortableRng(9), alpha_in=0.5, alpha_out=0.5,
                        stride=2, padding=1)
    soft = SoftOctaveConv2d(8, 6, 4, PortableRng(9), stride=2, padding=1)
    set_soft_betas(soft, 1.0, 1.0)
    got = soft(f_in)
    want = base(f_in)
    assert np.array_equal(got.high.data, want.high.data)
    assert np.array_equal(got.low.data, want.low.data)


def test_soft_octave_betas_scale_outputs(rng64):
    x = rng64.normal((2, 8, 8, 8))
    f_in = OctaveFeature(Tensor(x[:, :4]), ops.avg_pool2d(Tensor(x[:, 4:]), 2))
    soft = SoftOctaveConv2d(8, 6, 4, PortableRng(9), stride=2, padding=1, bias=False)
    set_soft_betas(soft, 1.0, 1.0)
    base_out = soft(f_in)
    set_soft_betas(soft, 0.5, 0.25)
    scaled = soft(f_in)
    assert np.allclose(scaled.high.data, 0.25 * base_out.high.data)
    assert np.allclose(scaled.low.data, 0.5 * base_out.low.data)


def test_soft_first_layer_takes_plain_input(rng):
    layer = SoftOctaveConv2d(3, 8, 4, PortableRng(2), stride=2, padding=1, first=True)
    out = layer(OctaveFeature(Tensor(rng.normal((2, 3, 16, 16))), None))
    assert out.high.shape == (2, 4, 8, 8)
    assert out.low.shape == (2, 4, 4, 4)


def test_soft_transpose_parity_and_shapes(rng):
    layer = SoftOctaveConvTranspose2d(8, 6, 4, PortableRng(4), stride=2, padding=1,
                                      bias=False)
    assert sum(p.data.size for p in layer.parameters()) == 4 * 4 * 8 * 6
    f = feature(rng, 1, 4, 4, 8)
    out = layer(f)
    assert out.high.shape == (1, 3, 16, 16)
    assert out.low.shape == (1, 3, 8, 8)


def test_path_counters_track_usage(rng):
    reset_counters()
    layer = OctaveConv2d(8, 6, 3, PortableRng(5), alpha_in=0.5, alpha_out=0.5,
                         stride=1, padding=1)
    layer(feature(rng, 1, 4, 4, 8))
    for path in ("hh", "lh", "hl", "ll"):
        assert counters.get(f"octave_conv.{path}", 0) == 1

    reset_counters()
    soft = SoftOctaveConv2d(8, 6, 4, PortableRng(5), stride=2, padding=1)
    f = feature(rng, 1, 4, 4, 8)
    set_soft_betas(soft, 1.0, 1.0)
    soft(f)
    # Both branches skip the multiply at beta = 1.
    assert counters.get("soft_scale.skip_high", 0) == 1
    assert counters.get("soft_scale.skip_low", 0) == 1
    set_soft_betas(soft, 0.5, 1.0)
    soft(f)
    assert counters.get("soft_scale.low", 0) == 1       # low scaled this time
    assert counters.get("soft_scale.skip_high", 0) == 2  # high still skipped


def test_set_soft_betas_returns_layer_count():
    from octgan import nn

    class Net(nn.Module):
        def __init__(self):
            super().__init__()
            self.a = SoftOctaveConv2d(8, 8, 3, PortableRng(0), stride=1, padding=1)
            self.b = SoftOctaveConvTranspose2d(8, 8, 4, PortableRng(0), stride=2, padding=1)
            self.c = nn.Conv2d(3, 3, 3, PortableRng(0))

    net = Net()
    assert set_soft_betas(net, 0.5, 0.75) == 2
    assert net.a.beta_low == 0.5 and net.b.beta_high == 0.75


def test_dual_batch_norm_branches_are_independent(rng):
    dual = DualBatchNorm2d(3, 2, PortableRng(6))
    dual.train()
    f = feature(rng, 4, 3, 2, 8)
    out = dual(f)
    assert out.high.shape == f.high.shape
    assert out.low.shape == f.low.shape
    # Each branch normalizes with its own statistics.
    for branch in (out.high.data, out.low.data):
        assert np.allclose(branch.mean(axis=(0, 2, 3)), 0.0, atol=1e-6)
    # Distinct running buffers exist for the two branches.
    names = dict(dual.named_buffers())
    assert len(names) == 4


def test_dual_batch_norm_handles_missing_low(rng):
    dual = DualBatchNorm2d(3, 0, PortableRng(6))
    f = OctaveFeature(Tensor(rng.normal((2, 3, 8, 8))), None)
    out = dual(f)
    assert out.low is None


# -- beta schedules -----------------------------------------------------------

def test_schedule_presets_endpoints():
    total = 21
    constant = BetaSchedule.from_name("constant")
    ramp = BetaSchedule.from_name("ramp")
    combo = BetaSchedule.from_name("combination")
    coupled = BetaSchedule.from_name("coupled")

    assert constant.at_epoch(0, total) == (1.0, 1.0)
    assert constant.at_epoch(total - 1, total) == (1.0, 1.0)

    assert ramp.at_epoch(0, total) == (1.0, 0.0)
    assert ramp.at_epoch(total - 1, total) == (0.0, 1.0)
    mid = ramp.at_epoch(10, total)
    assert mid[0] == pytest.approx(0.5) and mid[1] == pytest.approx(0.5)

    assert combo.at_epoch(0, total) == (1.0, 0.25)
    assert combo.at_epoch(10, total) == (0.75, 0.75)
    assert combo.at_epoch(total - 1, total) == (0.25, 1.0)

    bl, bh = coupled.at_epoch(7, total)
    assert bl == pytest.approx(1.0 - bh)


def test_schedule_custom_points_interpolate():
    sched = BetaSchedule([(0.0, 1.0, 0.0), (0.5, 0.5, 0.5), (1.0, 1.0, 1.0)])
    bl, bh = sched.evaluate(0.25)
    assert bl == pytest.approx(0.75) and bh == pytest.approx(0.25)
    bl, bh = sched.evaluate(0.75)
    assert bl == pytest.approx(0.75) and bh == pytest.approx(0.75)


def test_schedule_validation():
    with pytest.raises(ConfigError):
        BetaSchedule([(0.0, 1.0, 1.0)])                       # single point
    with pytest.raises(ConfigError):
        BetaSchedule([(0.2, 1, 1), (1.0, 1, 1)])              # must start at 0
    with pytest.raises(ConfigError):
        BetaSchedule([(0.0, 1, 1), (0.5, 1, 1), (0.4, 1, 1)])  # not increasing
    with pytest.raises(ConfigError):
        BetaSchedule([(0.0, -1, 1), (1.0, 1, 1)])              # negative beta
    with pytest.raises(ConfigError):
        BetaSchedule.from_name("nonsense")


def test_single_epoch_schedule_uses_start_value():
    ramp = BetaSchedule.from_name("ramp")
    assert ramp.at_epoch(0, 1) == (1.0, 0.0)

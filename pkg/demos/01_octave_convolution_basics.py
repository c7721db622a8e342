"""Octave convolutions from the ground up.

Walks through the channel split into a full-resolution "high" group and a
half-resolution "low" group, the four kernel banks that exchange information
between them, the degeneracy back to a plain convolution at alpha = 0, and
the parameter-count parity that makes standard/octave/soft-octave models
directly comparable.
"""

import numpy as np

import octgan.ops as ops
from octgan.nn import Conv2d
from octgan.octave import (OctaveConv2d, OctaveFeature, SoftOctaveConv2d,
                           counters, octave_merge, octave_split,
                           reset_counters, set_soft_betas, split_channels)
from octgan.rng import PortableRng
from octgan.tensor import Tensor


def main():
    rng = PortableRng(0)

    print("== channel split ==")
    for c, alpha in ((32, 0.5), (32, 0.25), (7, 0.5), (8, 0.0)):
        high, low = split_channels(c, alpha)
        print(f"  {c:3d} channels at alpha={alpha}: {high} high + {low} low")

    print("\n== split / merge round trip ==")
    x = Tensor(rng.normal((2, 8, 16, 16)).astype(np.float32))
    feat = octave_split(x, 0.5)
    print(f"  input {x.shape} -> high {feat.high.shape}, low {feat.low.shape}")
    merged = octave_merge(feat)
    print(f"  merged back to {merged.shape}; high channels pass through "
          f"exactly: {np.array_equal(merged.data[:, :4], x.data[:, :4])}")

    print("\n== the four kernel banks ==")
    layer = OctaveConv2d(8, 8, 3, rng, alpha_in=0.5, alpha_out=0.5,
                         stride=1, padding=1)
    reset_counters()
    out = layer(feat)
    print(f"  out high {out.high.shape}, out low {out.low.shape}")
    print("  paths taken:", {k: v for k, v in sorted(counters.items()) if v})

    print("\n== alpha = 0 degenerates to a plain convolution ==")
    plain = Conv2d(3, 5, 3, PortableRng(77), stride=1, padding=1)
    degenerate = OctaveConv2d(3, 5, 3, PortableRng(77), alpha_in=0.0,
                              alpha_out=0.0, stride=1, padding=1)
    img = Tensor(rng.normal((2, 3, 16, 16)).astype(np.float32))
    gap = np.max(np.abs(degenerate(OctaveFeature(img, None)).high.data
                        - plain(img).data))
    print(f"  max |octave(alpha=0) - conv2d| = {gap:.3e}")

    print("\n== soft octave: beta scaling on the output branches ==")
    xs = rng.normal((2, 8, 16, 16)).astype(np.float32)
    f_in = OctaveFeature(Tensor(xs[:, :4]), ops.avg_pool2d(Tensor(xs[:, 4:]), 2))
    soft = SoftOctaveConv2d(8, 8, 3, PortableRng(5), stride=1, padding=1,
                            bias=False)
    for beta_low, beta_high in ((1.0, 1.0), (1.0, 0.5), (1.0, 0.0)):
        set_soft_betas(soft, beta_low, beta_high)
        o = soft(f_in)
        print(f"  beta=({beta_low}, {beta_high}): |high| = "
              f"{np.abs(o.high.data).mean():.4f}, |low| = "
              f"{np.abs(o.low.data).mean():.4f}")
    print("  (beta_high scales the high-frequency branch; at 0 it is silent)")

    print("\n== parameter parity ==")
    from octgan.models import build_discriminator, build_generator, parameter_count
    for kind in ("standard", "octave", "soft_octave"):
        g = parameter_count(build_generator(32, 64, 32, 3, kind, 0.5, 0))
        d = parameter_count(build_discriminator(32, 32, 3, kind, 0.5, 0))
        print(f"  {kind:12s}: generator {g}, discriminator {d}")


if __name__ == "__main__":
    main()

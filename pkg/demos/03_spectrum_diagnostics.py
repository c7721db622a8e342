"""Radial power spectra as a texture diagnostic.

The 1D power spectrum collapses each image's 2D FFT onto integer radial
bins, so "how much energy lives at high spatial frequency" becomes a
single curve.  This script renders two synthetic corpora that differ only
in texture amplitude and shows that the diagnostic separates them
cleanly: the band-limited corpus has essentially no energy in the top
quarter of radii, while the textured one does.

Run with:  python demos/03_spectrum_diagnostics.py
"""

import numpy as np

from octgan.data import make_shapes_images
from octgan.spectrum import (band_power, high_band_slice, power_spectrum_1d,
                             spectrum_distance)

SIZE = 32
COUNT = 128
SEED = 5


def main():
    smooth = make_shapes_images(COUNT, SEED, SIZE, texture_amplitude=0.0)
    textured = make_shapes_images(COUNT, SEED, SIZE, texture_amplitude=0.25)

    prof_smooth = power_spectrum_1d(smooth)
    prof_textured = power_spectrum_1d(textured)

    hi = high_band_slice(SIZE)
    print(f"corpora: {COUNT} images at {SIZE}x{SIZE}, amplitudes 0.0 and 0.25")
    print(f"radial bins: 0..{SIZE // 2}; high band = bins {hi.start}..{hi.stop - 1}")

    print("\n== radial profile (dB relative to unit power) ==")
    db_s = prof_smooth.db()
    db_t = prof_textured.db()
    print(f"  {'bin':>3}  {'smooth':>9}  {'textured':>9}")
    for b in prof_smooth.bins:
        mark = "  <- high band" if b >= hi.start else ""
        print(f"  {b:3d}  {db_s[b]:9.2f}  {db_t[b]:9.2f}{mark}")

    print("\n== band power ==")
    for name, prof in (("smooth", prof_smooth), ("textured", prof_textured)):
        full = band_power(prof, "full")
        high = band_power(prof, "high")
        rel_db = 10.0 * np.log10(high / prof.power[0])
        print(f"  {name:9s} full={full:.6f}  high={high:.3e}  "
              f"high rel DC = {rel_db:.1f} dB")

    ratio = band_power(prof_textured) / band_power(prof_smooth)
    print(f"  texture raises high-band power by a factor of {ratio:.0f}")

    print("\n== profile distances ==")
    print("  mean |log power gap|, treating the smooth corpus as reference:")
    for band in ("high", "full"):
        d_self = spectrum_distance(prof_smooth, prof_smooth, band)
        d_tex = spectrum_distance(prof_textured, prof_smooth, band)
        print(f"  band={band:4s}  smooth vs itself = {d_self:.3f}   "
              f"textured vs smooth = {d_tex:.3f}")

    print("\nThis is the quantity the trainer logs per epoch (spec_high_dist):")
    print("the high-band distance between generated and real profiles.  A")
    print("generator that oversharpens shows up as excess power in exactly")
    print("these bins long before the artifacts are obvious to the eye.")


if __name__ == "__main__":
    main()

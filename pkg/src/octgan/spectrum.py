"""Azimuthally averaged 1D power spectra of image batches.

The diagnostic behind the high-frequency artifact comparison: images are
converted to luminance, Fourier-transformed, center-shifted, and the squared
magnitudes are averaged over annuli of integer radius.  Power is normalized
by S^4 so a unit-constant image has exactly 1 in bin 0, making profiles
comparable across image sizes.  Corner frequencies beyond radius S/2 are
discarded, as is standard for azimuthal integration.

A Parseval identity check (sum of unnormalized power == S^2 * sum of squared
pixels) runs before binning and raises on disagreement, guarding the
transform's correctness on every call.
"""

from __future__ import annotations

import numpy as np

from .errors import NumericError, ShapeError

LOG_EPS = 1e-12
_PARSEVAL_RTOL = 1e-6

# Rec. 601 luminance weights.
_LUMA = np.array([0.299, 0.587, 0.114], dtype=np.float64)


class SpectrumProfile:
    """Radial power profile: ``power[r]`` for integer radii 0..S/2."""

    def __init__(self, power: np.ndarray, image_size: int, n_images: int):
        self.power = np.asarray(power, dtype=np.float64)
        self.image_size = int(image_size)
        self.n_images = int(n_images)

    @property
    def bins(self) -> np.ndarray:
        return np.arange(self.power.size)

    def db(self) -> np.ndarray:
        """Profile in decibels relative to unit power."""
        return 10.0 * np.log10(self.power + LOG_EPS)


def to_luminance(images: np.ndarray) -> np.ndarray:
    """(N, 1 or 3, S, S) -> (N, S, S) float64 luminance."""
    x = np.asarray(images, dtype=np.float64)
    if x.ndim != 4 or x.shape[1] not in (1, 3):
        raise ShapeError(f"expected (N, 1|3, S, S) images, got {x.shape}")
    if x.shape[1] == 1:
        return x[:, 0]
    return np.einsum("nchw,c->nhw", x, _LUMA)


def _radial_bin_index(s: int) -> tuple[np.ndarray, np.ndarray]:
    """Integer radius of each center-shifted frequency; mask of kept pixels."""
    c = s // 2
    fy = np.arange(s) - c
    r = np.sqrt(fy[:, None] ** 2 + fy[None, :] ** 2)
    idx = np.floor(r + 0.5).astype(np.int64)
    keep = idx <= s // 2
    return idx, keep


def power_spectrum_1d(images: np.ndarray) -> SpectrumProfile:
    """Mean azimuthally averaged power spectrum of an image batch.

    Images may be single-channel or RGB (converted to luminance).  `S` must
    be at least 4.  Returns S/2 + 1 bins; bin 0 of a unit-constant image
    equals 1 under the S^4 normalization.
    """
    luma = to_luminance(images)
    n, s, s2 = luma.shape
    if s != s2 or s < 4:
        raise ShapeError(f"expected square images of side >= 4, got {s}x{s2}")

    f = np.fft.fft2(luma)
    p = np.abs(f) ** 2

    # Parseval guard on the unnormalized transform.  Written so that a
    # non-finite deviation (NaN/inf input) also fails the check.
    lhs = p.sum(axis=(1, 2))
    rhs = (s * s) * (luma ** 2).sum(axis=(1, 2))
    scale = np.maximum(np.abs(rhs), 1e-300)
    if not np.all(np.abs(lhs - rhs) / scale <= _PARSEVAL_RTOL):
        raise NumericError("power_spectrum_1d: Parseval identity violated by FFT output")

    p = np.fft.fftshift(p, axes=(1, 2)) / float(s) ** 4

    idx, keep = _radial_bin_index(s)
    nbins = s // 2 + 1
    flat_idx = idx[keep]
    counts = np.bincount(flat_idx, minlength=nbins).astype(np.float64)
    sums = np.zeros(nbins, dtype=np.float64)
    for i in range(n):
        sums += np.bincount(flat_idx, weights=p[i][keep], minlength=nbins)
    return SpectrumProfile(sums / (n * counts), s, n)


def high_band_slice(s: int) -> slice:
    """Radial bins counted as "high frequency": radii strictly above 0.75 * (S/2)."""
    start = int(np.floor(0.75 * (s // 2))) + 1
    return slice(start, s // 2 + 1)


def spectrum_distance(gen: SpectrumProfile, real: SpectrumProfile, band: str = "high") -> float:
    """Mean absolute log-power gap between two profiles over a radial band.

    ``band`` is ``"high"`` (top quarter of radii) or ``"full"``.  Both
    profiles must come from images of the same size.
    """
    if gen.image_size != real.image_size:
        raise ShapeError(
            f"profiles come from different image sizes: {gen.image_size} vs {real.image_size}")
    if band == "high":
        sl = high_band_slice(gen.image_size)
    elif band == "full":
        sl = slice(0, gen.image_size // 2 + 1)
    else:
        raise ValueError(f"band must be 'high' or 'full', got '{band}'")
    lg = np.log(gen.power[sl] + LOG_EPS)
    lr = np.log(real.power[sl] + LOG_EPS)
    return float(np.mean(np.abs(lg - lr)))


def band_power(profile: SpectrumProfile, band: str = "high") -> float:
    """Total power in a radial band of the profile."""
    if band == "high":
        sl = high_band_slice(profile.image_size)
    elif band == "full":
        sl = slice(0, profile.image_size // 2 + 1)
    else:
        raise ValueError(f"band must be 'high' or 'full', got '{band}'")
    return float(profile.power[sl].sum())


def profile_to_csv(profile: SpectrumProfile) -> str:
    """Serialize a profile as ``bin,power`` CSV rows (header included)."""
    lines = ["bin,power"]
    for b, p in zip(profile.bins, profile.power):
        lines.append(f"{int(b)},{float(p)!r}")
    return "\n".join(lines) + "\n"

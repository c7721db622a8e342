"""Datasets: a synthetic shapes corpus and a PPM/PGM image directory loader.

The synthetic corpus is the desk-scale stand-in for a face dataset: smooth
shaded backgrounds with a few anti-aliased ellipses and rectangles, Gaussian
blurred so the spectrum is dominated by low frequencies, plus an optional
fine-texture overlay that restores a controlled amount of high-frequency
power.  With ``texture_amplitude = 0`` the images are band-limited (high-band
power tens of dB below DC), which the spectrum tooling can verify.

Directory ingestion center-crops to square, bilinear-resizes to the target
side, and maps pixels to [-1, 1].  Epoch iteration order is a seeded
permutation, identical across runs for equal seeds.
"""

from __future__ import annotations

import os
import re

import numpy as np

from .errors import ConfigError, DatasetError
from .ppm import read_image, uint8_to_tensor
from .rng import PortableRng


class SyntheticSpec:
    """Parsed form of ``shapes:count:seed[:texture_amplitude]``."""

    def __init__(self, kind: str, count: int, seed: int, texture_amplitude: float = 0.1):
        if kind != "shapes":
            raise ConfigError(f"unknown synthetic kind '{kind}' (only 'shapes')")
        if count < 1:
            raise ConfigError("synthetic count must be positive")
        if texture_amplitude < 0:
            raise ConfigError("texture amplitude must be non-negative")
        self.kind = kind
        self.count = count
        self.seed = seed
        self.texture_amplitude = texture_amplitude

    @classmethod
    def parse(cls, text: str) -> "SyntheticSpec":
        parts = text.split(":")
        if len(parts) not in (3, 4):
            raise ConfigError(
                f"synthetic spec must be kind:count:seed[:amplitude], got '{text}'")
        try:
            count = int(parts[1])
            seed = int(parts[2])
            amp = float(parts[3]) if len(parts) == 4 else 0.1
        except ValueError:
            raise ConfigError(f"malformed synthetic spec '{text}'") from None
        return cls(parts[0], count, seed, amp)

    def serialize(self) -> str:
        return f"{self.kind}:{self.count}:{self.seed}:{self.texture_amplitude!r}"


def _gaussian_kernel1d(sigma: float) -> np.ndarray:
    radius = max(1, int(np.ceil(3.0 * sigma)))
    xs = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-0.5 * (xs / sigma) ** 2)
    return k / k.sum()


def gaussian_blur(img: np.ndarray, sigma: float) -> np.ndarray:
    """Separable Gaussian blur of an (H, W) array with periodic padding.

    Periodic (wrap) padding keeps blurred images smooth under the DFT's
    periodic extension, so the blur's frequency attenuation is realized
    without leakage from artificial border discontinuities.
    """
    k = _gaussian_kernel1d(sigma)
    r = (k.size - 1) // 2
    p = np.pad(img, ((r, r), (0, 0)), mode="wrap")
    out = np.zeros_like(img)
    for i, kv in enumerate(k):
        out += kv * p[i:i + img.shape[0], :]
    p = np.pad(out, ((0, 0), (r, r)), mode="wrap")
    out = np.zeros_like(img)
    for i, kv in enumerate(k):
        out += kv * p[:, i:i + img.shape[1]]
    return out


def _render_shape_mask(rng: PortableRng, s: int) -> np.ndarray:
    """Anti-aliased filled ellipse or rectangle mask in [0, 1]."""
    yy, xx = np.mgrid[0:s, 0:s].astype(np.float64)
    cx = (0.2 + 0.6 * rng.uniform(())) * s
    cy = (0.2 + 0.6 * rng.uniform(())) * s
    if rng.uniform(()) < 0.5:
        rx = (0.08 + 0.22 * rng.uniform(())) * s
        ry = (0.08 + 0.22 * rng.uniform(())) * s
        d = np.sqrt(((xx - cx) / rx) ** 2 + ((yy - cy) / ry) ** 2)
        edge = 1.0 / min(rx, ry)
        return np.clip((1.0 - d) / edge + 0.5, 0.0, 1.0)
    hx = (0.08 + 0.22 * rng.uniform(())) * s
    hy = (0.08 + 0.22 * rng.uniform(())) * s
    dx = np.abs(xx - cx) - hx
    dy = np.abs(yy - cy) - hy
    d = np.maximum(dx, dy)
    return np.clip(0.5 - d, 0.0, 1.0)


def make_shapes_images(count: int, seed: int, size: int = 32,
                       texture_amplitude: float = 0.1) -> np.ndarray:
    """Render the synthetic shapes corpus as (count, 3, size, size) float32.

    Deterministic per (count, seed, size, amplitude); values lie in [-1, 1].
    """
    rng = PortableRng.derived(seed, "shapes")
    s = size
    yy, xx = np.mgrid[0:s, 0:s].astype(np.float64) / s
    images = np.empty((count, 3, s, s), dtype=np.float32)
    for i in range(count):
        # Smooth background: base color plus low-order cosine waves.  Integer
        # wave numbers keep the background exactly periodic, so it contributes
        # no spectral leakage beyond its own low-frequency bins.
        img = np.empty((3, s, s), dtype=np.float64)
        for ch in range(3):
            base = -0.4 + 0.8 * rng.uniform(())
            kx = 1 + rng.integer(2)
            ky = 1 + rng.integer(2)
            ax = 0.1 + 0.25 * rng.uniform(())
            ay = 0.1 + 0.25 * rng.uniform(())
            px = 2.0 * np.pi * rng.uniform(())
            py = 2.0 * np.pi * rng.uniform(())
            img[ch] = (base
                       + ax * np.cos(2.0 * np.pi * kx * xx + px)
                       + ay * np.cos(2.0 * np.pi * ky * yy + py))
        n_shapes = 1 + rng.integer(3)
        for _ in range(n_shapes):
            mask = _render_shape_mask(rng, s)
            color = -0.8 + 1.6 * rng.uniform((3,))
            for ch in range(3):
                img[ch] = img[ch] * (1.0 - mask) + color[ch] * mask
        for ch in range(3):
            img[ch] = gaussian_blur(img[ch], BLUR_SIGMA)
        if texture_amplitude > 0:
            texture = rng.normal((s, s)) * texture_amplitude
            img += texture[None, :, :]
        images[i] = np.clip(img, -1.0, 1.0).astype(np.float32)
    return images


def center_crop_square(img: np.ndarray) -> np.ndarray:
    """Crop (H, W, C) or (H, W) to its central square."""
    h, w = img.shape[:2]
    side = min(h, w)
    top = (h - side) // 2
    left = (w - side) // 2
    return img[top:top + side, left:left + side]


def bilinear_resize(img: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Bilinear resample of (H, W[, C]) float data, half-pixel centers."""
    h, w = img.shape[:2]
    if (h, w) == (out_h, out_w):
        return img.astype(np.float64, copy=True)
    ys = (np.arange(out_h) + 0.5) * (h / out_h) - 0.5
    xs = (np.arange(out_w) + 0.5) * (w / out_w) - 0.5
    ys = np.clip(ys, 0, h - 1)
    xs = np.clip(xs, 0, w - 1)
    y0 = np.floor(ys).astype(np.int64)
    x0 = np.floor(xs).astype(np.int64)
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    wy = (ys - y0)[:, None]
    wx = (xs - x0)[None, :]
    if img.ndim == 3:
        wy = wy[:, :, None]
        wx = wx[:, :, None]
    f = img.astype(np.float64)
    top = f[y0][:, x0] * (1 - wx) + f[y0][:, x1] * wx
    bot = f[y1][:, x0] * (1 - wx) + f[y1][:, x1] * wx
    return top * (1 - wy) + bot * wy


class ImageDataset:
    """In-memory dataset of (3, S, S) float32 images in [-1, 1].

    ``epoch_batches`` yields full batches in a permutation drawn from the
    dataset seed and epoch index, so any epoch's order is reproducible in
    isolation (which checkpoint resume relies on).  A trailing partial batch
    is dropped.
    """

    def __init__(self, images: np.ndarray, seed: int):
        images = np.asarray(images, dtype=np.float32)
        if images.ndim != 4 or images.shape[1] != 3:
            raise DatasetError(f"expected (N, 3, S, S) images, got {images.shape}")
        if images.shape[0] < 1:
            raise DatasetError("dataset is empty")
        self.images = images
        self.seed = seed

    def __len__(self) -> int:
        return self.images.shape[0]

    @property
    def image_size(self) -> int:
        return self.images.shape[2]

    def epoch_batches(self, epoch: int, batch_size: int):
        if batch_size < 1:
            raise ValueError("batch_size must be positive")
        if batch_size > len(self):
            raise DatasetError(
                f"batch size {batch_size} exceeds dataset size {len(self)}")
        order = PortableRng.derived(self.seed, 1_000_000 + epoch).permutation(len(self))
        for start in range(0, len(self) - batch_size + 1, batch_size):
            yield self.images[order[start:start + batch_size]]

    def batches_per_epoch(self, batch_size: int) -> int:
        return len(self) // batch_size


BLUR_SIGMA = 1.75

_IMAGE_EXT = re.compile(r"\.(ppm|pgm)$", re.IGNORECASE)


def load_image_directory(path: str, size: int, seed: int = 0) -> tuple[ImageDataset, int]:
    """Load every readable PPM/PGM under ``path`` (non-recursive).

    Returns (dataset, skipped_count); unreadable or non-image files are
    skipped and counted.  Zero usable images raises.
    """
    if not os.path.isdir(path):
        raise DatasetError(f"dataset directory not found: {path}")
    tensors = []
    skipped = 0
    for name in sorted(os.listdir(path)):
        full = os.path.join(path, name)
        if not os.path.isfile(full) or not _IMAGE_EXT.search(name):
            skipped += 1
            continue
        try:
            raw = read_image(full)
        except DatasetError:
            skipped += 1
            continue
        square = center_crop_square(raw)
        if square.ndim == 2:
            square = square[:, :, None].repeat(3, axis=2)
        resized = bilinear_resize(square.astype(np.float64), size, size)
        tensors.append(np.moveaxis(resized / 127.5 - 1.0, -1, 0).astype(np.float32))
    if not tensors:
        raise DatasetError(f"no usable images in {path} ({skipped} files skipped)")
    return ImageDataset(np.stack(tensors), seed), skipped


def load_synthetic(spec: SyntheticSpec, size: int) -> ImageDataset:
    images = make_shapes_images(spec.count, spec.seed, size, spec.texture_amplitude)
    return ImageDataset(images, spec.seed)

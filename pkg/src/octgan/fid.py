"""Frechet distance over feature statistics, with desk-scale extractors.

FID compares Gaussian fits (mu, Sigma) of feature embeddings of two image
sets: ||mu_a - mu_b||^2 + Tr(Sigma_a + Sigma_b - 2(Sigma_a Sigma_b)^{1/2}).
Instead of an Inception network, two small frozen extractors are provided:

- ``raw-moments``: per-channel mean and variance plus an 8x8 average-pooled
  thumbnail (198 dims for RGB) -- cheap and fully transparent.
- ``fixed-random-conv``: a randomly initialized, frozen convolution stack
  with per-layer global average pooling (the default; random frozen
  features are a standard small-scale stand-in).  Deterministic given its
  seed, identical across processes and platforms.

Everything here computes in float64 regardless of the training dtype.
"""

from __future__ import annotations

import numpy as np

from .errors import NumericError, ShapeError
from .rng import PortableRng

DEFAULT_SEED = 7
DEFAULT_DEPTH = 4
DEFAULT_WIDTH = 64


class FeatureExtractor:
    """Frozen image-to-vector embedding for FID statistics.

    ``kind`` is ``"raw-moments"`` or ``"fixed-random-conv"``.  The random
    conv stack has ``depth`` stride-2 3x3 layers of ``width`` channels with
    LeakyReLU(0.2), He-scaled N(0, sqrt(2/fan_in)) weights drawn from a
    :class:`PortableRng`, and concatenates global average pools of every
    layer's activation (output dim = depth * width).
    """

    def __init__(self, kind: str = "fixed-random-conv", seed: int = DEFAULT_SEED,
                 depth: int = DEFAULT_DEPTH, width: int = DEFAULT_WIDTH,
                 channels: int = 3):
        if kind not in ("raw-moments", "fixed-random-conv"):
            raise ValueError(f"unknown extractor kind '{kind}'")
        self.kind = kind
        self.seed = seed
        self.depth = depth
        self.width = width
        self.channels = channels
        if kind == "fixed-random-conv":
            rng = PortableRng.derived(seed, "feature-extractor")
            self.weights = []
            cin = channels
            for _ in range(depth):
                fan_in = cin * 9
                w = rng.normal((width, cin, 3, 3)) * np.sqrt(2.0 / fan_in)
                self.weights.append(w.astype(np.float64))
                cin = width
            self.output_dim = depth * width
        else:
            self.output_dim = 2 * channels + channels * 64

    def __call__(self, images: np.ndarray) -> np.ndarray:
        return extract_features(images, self)


def _avg_pool(x: np.ndarray, k: int) -> np.ndarray:
    n, c, h, w = x.shape
    return x.reshape(n, c, h // k, k, w // k, k).mean(axis=(3, 5))


def _conv3x3_s2(x: np.ndarray, w: np.ndarray) -> np.ndarray:
    from .ops import conv2d_forward
    y, _ = conv2d_forward(x, w, 2, 1)
    return y


def extract_features(images: np.ndarray, fe: FeatureExtractor) -> np.ndarray:
    """Embed (N, C, S, S) images as (N, D) float64 feature rows."""
    x = np.asarray(images, dtype=np.float64)
    if x.ndim != 4:
        raise ShapeError(f"expected (N, C, S, S) images, got {x.shape}")
    n, c, h, w = x.shape
    if c != fe.channels:
        raise ShapeError(f"extractor expects {fe.channels} channels, got {c}")

    if fe.kind == "raw-moments":
        mean = x.mean(axis=(2, 3))
        var = x.var(axis=(2, 3))
        if h % 8 or w % 8:
            raise ShapeError(f"raw-moments extractor needs sides divisible by 8, got {h}x{w}")
        thumb = _avg_pool(x, h // 8).reshape(n, c * 64)
        return np.concatenate([mean, var, thumb], axis=1)

    feats = []
    for wk in fe.weights:
        x = _conv3x3_s2(x, wk)
        x = np.where(x > 0, x, 0.2 * x)
        feats.append(x.mean(axis=(2, 3)))
    return np.concatenate(feats, axis=1)


class FidStats:
    """Gaussian fit of a feature set: mean, unbiased covariance, count."""

    def __init__(self, mu: np.ndarray, sigma: np.ndarray, n: int):
        self.mu = np.asarray(mu, dtype=np.float64)
        self.sigma = np.asarray(sigma, dtype=np.float64)
        self.n = int(n)
        if self.sigma.shape != (self.mu.size, self.mu.size):
            raise ShapeError("covariance shape does not match mean dimension")


def fit_stats(features: np.ndarray) -> FidStats:
    """Mean and unbiased sample covariance of (N, D) feature rows; N >= 2."""
    f = np.asarray(features, dtype=np.float64)
    if f.ndim != 2 or f.shape[0] < 2:
        raise ShapeError(f"need at least 2 feature rows of equal dimension, got shape {f.shape}")
    mu = f.mean(axis=0)
    d = f - mu
    sigma = d.T @ d / (f.shape[0] - 1)
    return FidStats(mu, sigma, f.shape[0])


def matrix_sqrt_psd(a: np.ndarray, *, sym_tol: float = 1e-8, eig_tol: float = 1e-8) -> np.ndarray:
    """Symmetric PSD square root via eigendecomposition.

    Eigenvalues in [-eig_tol, 0) are treated as rounding noise and clipped
    to zero; anything more negative means the input was not PSD and raises.
    """
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ShapeError(f"expected a square matrix, got {a.shape}")
    scale = max(1.0, float(np.abs(a).max()))
    if np.abs(a - a.T).max() > sym_tol * scale:
        raise NumericError("matrix_sqrt_psd: input is not symmetric within tolerance")
    evals, evecs = np.linalg.eigh((a + a.T) / 2.0)
    if evals.min() < -eig_tol * scale:
        raise NumericError(
            f"matrix_sqrt_psd: eigenvalue {evals.min():.3e} below PSD tolerance")
    evals = np.clip(evals, 0.0, None)
    return (evecs * np.sqrt(evals)) @ evecs.T


def fid(a: FidStats, b: FidStats) -> float:
    """Frechet distance between two Gaussian fits.

    The cross term Tr((Sigma_a Sigma_b)^{1/2}) is evaluated as
    Tr((Sigma_a^{1/2} Sigma_b Sigma_a^{1/2})^{1/2}) so every square root is
    taken of a symmetric PSD matrix.  Tiny negative results from rounding
    are clamped to zero.
    """
    if a.mu.shape != b.mu.shape:
        raise ShapeError(f"feature dimensions differ: {a.mu.shape} vs {b.mu.shape}")
    diff = a.mu - b.mu
    ra = matrix_sqrt_psd(a.sigma)
    inner = ra @ b.sigma @ ra
    cross = matrix_sqrt_psd((inner + inner.T) / 2.0)
    val = float(diff @ diff + np.trace(a.sigma) + np.trace(b.sigma) - 2.0 * np.trace(cross))
    return max(0.0, val)


def fid_from_images(images_a: np.ndarray, images_b: np.ndarray,
                    fe: FeatureExtractor | None = None) -> float:
    """FID-proxy between two image arrays using a shared extractor."""
    if fe is None:
        fe = FeatureExtractor()
    return fid(fit_stats(extract_features(images_a, fe)),
               fit_stats(extract_features(images_b, fe)))

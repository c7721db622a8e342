"""DCGAN-style generator and discriminator with pluggable convolution kind.

``conv_kind`` selects the convolution family used in the up/down blocks:

- ``standard``:    plain (transposed) convolutions.
- ``octave``:      hard channel split at a fixed alpha.
- ``soft_octave``: alpha = 0.5 split with beta output scaling driven by a
  schedule during training.

All three kinds have exactly the same parameter count for the same width
settings, so comparisons isolate the effect of the frequency decomposition.

The generator maps latent vectors to images in [-1, 1]:
linear -> 4x4 feature map -> log2(S)-2 upsampling blocks (transposed conv,
batch norm, ReLU) -> 3x3 convolution -> tanh.  The discriminator mirrors it
with stride-2 convolutions and LeakyReLU(0.2), no normalization, ending in
a linear layer that emits one raw score per image.
"""

from __future__ import annotations

import numpy as np

from . import nn, ops
from .errors import ConfigError, ShapeError
from .octave import (DualBatchNorm2d, OctaveConv2d, OctaveConvTranspose2d,
                     SoftOctaveConv2d, SoftOctaveConvTranspose2d, as_octave,
                     octave_leaky_relu, octave_merge, octave_relu)
from .rng import PortableRng
from .tensor import Tensor

CONV_KINDS = ("standard", "octave", "soft_octave")


def _check_kind(conv_kind: str) -> None:
    if conv_kind not in CONV_KINDS:
        raise ConfigError(f"unknown conv_kind '{conv_kind}' (choose from {', '.join(CONV_KINDS)})")


def _num_blocks(image_size: int) -> int:
    n = int(np.log2(image_size))
    if 2 ** n != image_size or image_size < 8:
        raise ConfigError(f"image_size must be a power of two >= 8, got {image_size}")
    return n - 2


def parameter_count(module: nn.Module) -> int:
    return sum(p.data.size for p in module.parameters())


class Generator(nn.Module):
    """Latent vector (N, latent_dim) -> image (N, channels, S, S) in [-1, 1]."""

    def __init__(self, image_size: int = 32, latent_dim: int = 64,
                 base_channels: int = 32, channels: int = 3,
                 conv_kind: str = "standard", alpha: float = 0.5,
                 rng: PortableRng | None = None):
        super().__init__()
        _check_kind(conv_kind)
        if rng is None:
            rng = PortableRng(0)
        self.image_size = image_size
        self.latent_dim = latent_dim
        self.conv_kind = conv_kind
        self.alpha = alpha
        n_up = _num_blocks(image_size)
        c0 = base_channels << n_up

        self.project = nn.Linear(latent_dim, c0 * 4 * 4, rng, bias=False)
        self.bn0 = nn.BatchNorm2d(c0, rng)
        self.c0 = c0

        self.blocks = []
        cin = c0
        for i in range(n_up):
            cout = cin // 2
            first = i == 0
            if conv_kind == "standard":
                conv = nn.ConvTranspose2d(cin, cout, 4, rng, stride=2, padding=1, bias=False)
                norm = nn.BatchNorm2d(cout, rng)
            elif conv_kind == "octave":
                conv = OctaveConvTranspose2d(
                    cin, cout, 4, rng,
                    alpha_in=0.0 if first else alpha, alpha_out=alpha,
                    stride=2, padding=1, bias=False)
                norm = DualBatchNorm2d(conv.out_high, conv.out_low, rng)
            else:
                conv = SoftOctaveConvTranspose2d(
                    cin, cout, 4, rng, stride=2, padding=1, bias=False, first=first)
                norm = DualBatchNorm2d(conv.out_high, conv.out_low, rng)
            setattr(self, f"up{i}_conv", conv)
            setattr(self, f"up{i}_norm", norm)
            self.blocks.append((conv, norm))
            cin = cout

        self.to_image = nn.Conv2d(base_channels, channels, 3, rng, stride=1, padding=1)

    def __setattr__(self, name, value):
        if name == "blocks":
            object.__setattr__(self, name, value)
        else:
            super().__setattr__(name, value)

    def forward(self, z: Tensor) -> Tensor:
        if z.ndim != 2 or z.shape[1] != self.latent_dim:
            raise ShapeError(f"expected latent input (N, {self.latent_dim}), got {z.shape}")
        h = self.project(z).reshape(z.shape[0], self.c0, 4, 4)
        h = self.bn0(h).relu()

        if self.conv_kind == "standard":
            for conv, norm in self.blocks:
                h = norm(conv(h)).relu()
        else:
            feat = as_octave(h)
            for conv, norm in self.blocks:
                feat = octave_relu(norm(conv(feat)))
            h = octave_merge(feat)

        return self.to_image(h).tanh()


class Discriminator(nn.Module):
    """Image (N, channels, S, S) -> raw realness score (N, 1)."""

    def __init__(self, image_size: int = 32, base_channels: int = 32,
                 channels: int = 3, conv_kind: str = "standard",
                 alpha: float = 0.5, rng: PortableRng | None = None):
        super().__init__()
        _check_kind(conv_kind)
        if rng is None:
            rng = PortableRng(0)
        self.image_size = image_size
        self.conv_kind = conv_kind
        self.alpha = alpha
        n_down = _num_blocks(image_size)

        self.blocks = []
        cin = channels
        cout = base_channels
        for i in range(n_down):
            first = i == 0
            if conv_kind == "standard":
                conv = nn.Conv2d(cin, cout, 4, rng, stride=2, padding=1)
            elif conv_kind == "octave":
                conv = OctaveConv2d(
                    cin, cout, 4, rng,
                    alpha_in=0.0 if first else alpha, alpha_out=alpha,
                    stride=2, padding=1)
            else:
                conv = SoftOctaveConv2d(cin, cout, 4, rng, stride=2, padding=1, first=first)
            setattr(self, f"down{i}_conv", conv)
            self.blocks.append(conv)
            cin = cout
            if i < n_down - 1:
                cout *= 2

        self.flat_features = cout * 4 * 4
        self.score = nn.Linear(self.flat_features, 1, rng)

    def __setattr__(self, name, value):
        if name == "blocks":
            object.__setattr__(self, name, value)
        else:
            super().__setattr__(name, value)

    def forward(self, x: Tensor) -> Tensor:
        if x.ndim != 4 or x.shape[2] != self.image_size or x.shape[3] != self.image_size:
            raise ShapeError(f"expected (N, C, {self.image_size}, {self.image_size}) input, got {x.shape}")
        if self.conv_kind == "standard":
            h = x
            for conv in self.blocks:
                h = conv(h).leaky_relu(0.2)
        else:
            feat = as_octave(x)
            for conv in self.blocks:
                feat = octave_leaky_relu(conv(feat), 0.2)
            h = octave_merge(feat)
        return self.score(h.reshape(h.shape[0], self.flat_features))


def build_generator(image_size: int = 32, latent_dim: int = 64, base_channels: int = 32,
                    channels: int = 3, conv_kind: str = "standard", alpha: float = 0.5,
                    seed: int = 0) -> Generator:
    """Construct a generator with deterministic weights from ``seed``."""
    return Generator(image_size, latent_dim, base_channels, channels,
                     conv_kind, alpha, PortableRng.derived(seed, "generator"))


def build_discriminator(image_size: int = 32, base_channels: int = 32, channels: int = 3,
                        conv_kind: str = "standard", alpha: float = 0.5,
                        seed: int = 0) -> Discriminator:
    """Construct a discriminator with deterministic weights from ``seed``."""
    return Discriminator(image_size, base_channels, channels,
                         conv_kind, alpha, PortableRng.derived(seed, "discriminator"))


def sample_latents(rng: PortableRng, n: int, latent_dim: int) -> Tensor:
    """Draw standard-normal latent vectors as a non-grad tensor."""
    from .tensor import get_default_dtype
    return Tensor(rng.normal((n, latent_dim)).astype(get_default_dtype()))

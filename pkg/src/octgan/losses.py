"""GAN loss functions over raw (pre-sigmoid) discriminator scores.

Three formulations are provided under a common interface:

- ``vanilla``: the non-saturating logistic loss, written in terms of
  softplus so no explicit sigmoid/log pair can overflow.
- ``lsgan``: least-squares with targets 1 (real) and 0 (fake); the
  generator pushes fakes toward 1.
- ``wgan``: the critic maximizes the score gap between real and fake;
  callers must clamp critic weights after each update (``needs_clip``).
"""

from __future__ import annotations

from .errors import ConfigError
from .tensor import Tensor, softplus


def d_loss_vanilla(d_real: Tensor, d_fake: Tensor) -> Tensor:
    return softplus(-d_real).mean() + softplus(d_fake).mean()


def g_loss_vanilla(d_fake: Tensor) -> Tensor:
    return softplus(-d_fake).mean()


def d_loss_lsgan(d_real: Tensor, d_fake: Tensor) -> Tensor:
    return 0.5 * ((d_real - 1.0) ** 2).mean() + 0.5 * (d_fake ** 2).mean()


def g_loss_lsgan(d_fake: Tensor) -> Tensor:
    return 0.5 * ((d_fake - 1.0) ** 2).mean()


def d_loss_wgan(d_real: Tensor, d_fake: Tensor) -> Tensor:
    return d_fake.mean() - d_real.mean()


def g_loss_wgan(d_fake: Tensor) -> Tensor:
    return -d_fake.mean()


_REGISTRY = {
    "vanilla": (d_loss_vanilla, g_loss_vanilla, False),
    "lsgan": (d_loss_lsgan, g_loss_lsgan, False),
    "wgan": (d_loss_wgan, g_loss_wgan, True),
}

LOSS_NAMES = tuple(_REGISTRY)


class GanLoss:
    """Named pair of discriminator/generator losses.

    ``needs_clip`` is True for formulations that require weight clipping on
    the discriminator after each optimizer step.
    """

    def __init__(self, name: str):
        if name not in _REGISTRY:
            raise ConfigError(f"unknown loss '{name}' (choose from {', '.join(LOSS_NAMES)})")
        self.name = name
        self._d, self._g, self.needs_clip = _REGISTRY[name]

    def d_loss(self, d_real: Tensor, d_fake: Tensor) -> Tensor:
        return self._d(d_real, d_fake)

    def g_loss(self, d_fake: Tensor) -> Tensor:
        return self._g(d_fake)

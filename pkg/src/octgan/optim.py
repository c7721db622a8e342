"""Adam optimizer and the weight clipping used by WGAN critics."""

from __future__ import annotations

import numpy as np

from .nn import Module, Parameter


class Adam:
    """Adam with bias-corrected moment estimates.

    Moments are stored per parameter in registration order; ``state_arrays``
    exposes them (plus the shared step count) for checkpointing.  A parameter
    with no gradient at :meth:`step` time indicates a wiring bug, so it
    raises instead of being silently skipped.
    """

    def __init__(self, params, lr: float = 2e-4, beta1: float = 0.5,
                 beta2: float = 0.999, eps: float = 1e-8):
        self.params: list[Parameter] = list(params)
        if not self.params:
            raise ValueError("optimizer got an empty parameter list")
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.step_count = 0
        self.m = [np.zeros_like(p.data, dtype=np.float32) for p in self.params]
        self.v = [np.zeros_like(p.data, dtype=np.float32) for p in self.params]

    def zero_grad(self) -> None:
        for p in self.params:
            p.zero_grad()

    def step(self) -> None:
        self.step_count += 1
        t = self.step_count
        bc1 = 1.0 - self.beta1 ** t
        bc2 = 1.0 - self.beta2 ** t
        for i, p in enumerate(self.params):
            if p.grad is None:
                raise RuntimeError(f"parameter {i} has no gradient at step time")
            g = p.grad.astype(self.m[i].dtype, copy=False)
            self.m[i] *= self.beta1
            self.m[i] += (1.0 - self.beta1) * g
            self.v[i] *= self.beta2
            self.v[i] += (1.0 - self.beta2) * (g * g)
            m_hat = self.m[i] / bc1
            v_hat = self.v[i] / bc2
            p.data -= (self.lr * m_hat / (np.sqrt(v_hat) + self.eps)).astype(p.data.dtype, copy=False)

    def state_arrays(self):
        """(m, v) moment lists and step count, in parameter order."""
        return self.m, self.v, self.step_count

    def load_state_arrays(self, m, v, step_count: int) -> None:
        if len(m) != len(self.params) or len(v) != len(self.params):
            raise ValueError("optimizer state length mismatch")
        for i, p in enumerate(self.params):
            if m[i].shape != p.data.shape or v[i].shape != p.data.shape:
                raise ValueError(f"optimizer state shape mismatch at parameter {i}")
            self.m[i] = m[i].astype(np.float32, copy=True)
            self.v[i] = v[i].astype(np.float32, copy=True)
        self.step_count = int(step_count)


def weight_clip(module: Module, clip: float = 0.01) -> None:
    """Clamp every parameter of ``module`` into [-clip, clip] in place."""
    if clip <= 0:
        raise ValueError("clip threshold must be positive")
    for p in module.parameters():
        np.clip(p.data, -clip, clip, out=p.data)

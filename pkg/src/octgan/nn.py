"""Layer abstractions over the autograd tensor: Module, Parameter, and the
standard layers used by the GAN models.

Weight-bearing layers draw their initial values from an explicitly passed
:class:`~octgan.rng.PortableRng`, so two models built from equal-seeded
generators are bit-identical.  Convolution weights follow the DCGAN recipe:
N(0, 0.02) for conv/linear kernels, N(1, 0.02) for batch-norm scale.
"""

from __future__ import annotations

from collections import OrderedDict
from typing import Iterator

import numpy as np

from . import ops
from .errors import ShapeError
from .rng import PortableRng
from .tensor import Tensor, get_default_dtype


WEIGHT_STD = 0.02


class Parameter(Tensor):
    """A trainable tensor; always requires gradient."""

    def __init__(self, data):
        super().__init__(data, requires_grad=True)


class Module:
    """Base class with automatic registration of parameters and submodules.

    Attribute assignment records parameters, buffers (plain numpy arrays
    registered via :meth:`register_buffer`), and child modules in insertion
    order, which fixes the iteration order used by optimizers and
    checkpoints.
    """

    def __init__(self):
        object.__setattr__(self, "_parameters", OrderedDict())
        object.__setattr__(self, "_buffers", OrderedDict())
        object.__setattr__(self, "_modules", OrderedDict())
        object.__setattr__(self, "training", True)

    def __setattr__(self, name, value):
        if isinstance(value, Parameter):
            self._parameters[name] = value
        elif isinstance(value, Module):
            self._modules[name] = value
        object.__setattr__(self, name, value)

    def register_buffer(self, name: str, value: np.ndarray) -> None:
        """Track a non-trainable array (e.g. batch-norm running stats)."""
        self._buffers[name] = value
        object.__setattr__(self, name, value)

    def forward(self, *args, **kwargs):
        raise NotImplementedError

    def __call__(self, *args, **kwargs):
        return self.forward(*args, **kwargs)

    def named_parameters(self, prefix: str = "") -> Iterator[tuple[str, Parameter]]:
        for name, p in self._parameters.items():
            yield prefix + name, p
        for cname, child in self._modules.items():
            yield from child.named_parameters(prefix + cname + ".")

    def parameters(self) -> list[Parameter]:
        return [p for _, p in self.named_parameters()]

    def named_buffers(self, prefix: str = "") -> Iterator[tuple[str, np.ndarray]]:
        for name in self._buffers:
            yield prefix + name, self._buffers[name]
        for cname, child in self._modules.items():
            yield from child.named_buffers(prefix + cname + ".")

    def modules(self) -> Iterator["Module"]:
        yield self
        for child in self._modules.values():
            yield from child.modules()

    def train(self) -> "Module":
        for m in self.modules():
            object.__setattr__(m, "training", True)
        return self

    def eval(self) -> "Module":
        for m in self.modules():
            object.__setattr__(m, "training", False)
        return self

    def zero_grad(self) -> None:
        for p in self.parameters():
            p.zero_grad()

    def state_dict(self) -> "OrderedDict[str, np.ndarray]":
        """Copies of all parameters and buffers, keyed by dotted path."""
        out = OrderedDict()
        for name, p in self.named_parameters():
            out[name] = p.data.copy()
        for name, b in self.named_buffers():
            out[name] = b.copy()
        return out

    def load_state_dict(self, state: dict) -> None:
        expected = OrderedDict()
        for name, p in self.named_parameters():
            expected[name] = p
        buffers = OrderedDict(self.named_buffers())
        missing = [k for k in list(expected) + list(buffers) if k not in state]
        extra = [k for k in state if k not in expected and k not in buffers]
        if missing or extra:
            raise KeyError(f"state dict mismatch: missing={missing}, unexpected={extra}")
        for name, p in expected.items():
            arr = np.asarray(state[name])
            if arr.shape != p.data.shape:
                raise ShapeError(f"parameter {name}: expected {p.data.shape}, got {arr.shape}")
            p.data = arr.astype(p.data.dtype, copy=True)
        for name, b in buffers.items():
            arr = np.asarray(state[name])
            if arr.shape != b.shape:
                raise ShapeError(f"buffer {name}: expected {b.shape}, got {arr.shape}")
            b[...] = arr


class Sequential(Module):
    """Chains modules; each child's output feeds the next one's input."""

    def __init__(self, *layers: Module):
        super().__init__()
        for i, layer in enumerate(layers):
            setattr(self, str(i), layer)
        self.layers = list(layers)

    def forward(self, x):
        for layer in self.layers:
            x = layer(x)
        return x

    def __setattr__(self, name, value):
        if name == "layers":
            object.__setattr__(self, name, value)
        else:
            super().__setattr__(name, value)


def _normal_param(rng: PortableRng, shape, std: float, mean: float = 0.0) -> Parameter:
    data = (rng.normal(shape) * std + mean).astype(get_default_dtype())
    return Parameter(data)


class Linear(Module):
    """Affine map y = x @ W^T + b over the last axis."""

    def __init__(self, in_features: int, out_features: int, rng: PortableRng, bias: bool = True):
        super().__init__()
        self.in_features = in_features
        self.out_features = out_features
        self.weight = _normal_param(rng, (out_features, in_features), WEIGHT_STD)
        if bias:
            self.bias = Parameter(np.zeros(out_features, dtype=get_default_dtype()))
        else:
            self.bias = None

    def forward(self, x: Tensor) -> Tensor:
        y = x @ self.weight.transpose2d()
        if self.bias is not None:
            y = y + self.bias
        return y


class Conv2d(Module):
    """Strided 2-D convolution; kernel shape (out, in, k, k)."""

    def __init__(self, in_channels: int, out_channels: int, kernel_size: int,
                 rng: PortableRng, stride: int = 1, padding: int = 0, bias: bool = True):
        super().__init__()
        self.stride = stride
        self.padding = padding
        self.weight = _normal_param(rng, (out_channels, in_channels, kernel_size, kernel_size), WEIGHT_STD)
        if bias:
            self.bias = Parameter(np.zeros(out_channels, dtype=get_default_dtype()))
        else:
            self.bias = None

    def forward(self, x: Tensor) -> Tensor:
        return ops.conv2d(x, self.weight, self.bias, self.stride, self.padding)


class ConvTranspose2d(Module):
    """Strided transposed convolution; kernel shape (in, out, k, k)."""

    def __init__(self, in_channels: int, out_channels: int, kernel_size: int,
                 rng: PortableRng, stride: int = 1, padding: int = 0, bias: bool = True):
        super().__init__()
        self.stride = stride
        self.padding = padding
        self.weight = _normal_param(rng, (in_channels, out_channels, kernel_size, kernel_size), WEIGHT_STD)
        if bias:
            self.bias = Parameter(np.zeros(out_channels, dtype=get_default_dtype()))
        else:
            self.bias = None

    def forward(self, x: Tensor) -> Tensor:
        return ops.conv_transpose2d(x, self.weight, self.bias, self.stride, self.padding)


class BatchNorm2d(Module):
    """Per-channel batch normalization over an NCHW tensor.

    When ``rng`` is given the scale is drawn from N(1, 0.02) per the DCGAN
    recipe; otherwise it starts at exactly 1.
    """

    def __init__(self, num_features: int, rng: PortableRng | None = None,
                 momentum: float = 0.1, eps: float = 1e-5):
        super().__init__()
        self.num_features = num_features
        self.momentum = momentum
        self.eps = eps
        if rng is not None:
            self.weight = _normal_param(rng, (num_features,), WEIGHT_STD, mean=1.0)
        else:
            self.weight = Parameter(np.ones(num_features, dtype=get_default_dtype()))
        self.bias = Parameter(np.zeros(num_features, dtype=get_default_dtype()))
        # Running stats share the parameter dtype so checkpoints (32-bit
        # blobs) round-trip them exactly.
        self.register_buffer("running_mean", np.zeros(num_features, dtype=get_default_dtype()))
        self.register_buffer("running_var", np.ones(num_features, dtype=get_default_dtype()))

    def forward(self, x: Tensor) -> Tensor:
        return ops.batch_norm2d(x, self.weight, self.bias, self.running_mean,
                                self.running_var, self.training, self.momentum, self.eps)


class ReLU(Module):
    def forward(self, x: Tensor) -> Tensor:
        return x.relu()


class LeakyReLU(Module):
    def __init__(self, slope: float = 0.2):
        super().__init__()
        self.slope = slope

    def forward(self, x: Tensor) -> Tensor:
        return x.leaky_relu(self.slope)


class Tanh(Module):
    def forward(self, x: Tensor) -> Tensor:
        return x.tanh()

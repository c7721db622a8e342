"""Dense tensors with reverse-mode automatic differentiation.

A :class:`Tensor` wraps a numpy array plus an optional gradient buffer and a
backward closure.  Operations build a DAG; calling :meth:`Tensor.backward` on
a scalar walks the graph in reverse topological order and accumulates
``d(loss)/d(node)`` into every node that requires gradients.

Two global switches live here:

* the default dtype (float32 for training, float64 for verification), and
* finite-value checking, which validates every operation's output when on.
"""

from __future__ import annotations

import contextlib

import numpy as np

from .errors import NumericError, ShapeError

_default_dtype = np.float32
_finite_checks = False
_grad_enabled = True


def set_default_dtype(dtype) -> None:
    """Set the dtype new tensors are created with (float32 or float64)."""
    global _default_dtype
    dtype = np.dtype(dtype)
    if dtype not in (np.dtype(np.float32), np.dtype(np.float64)):
        raise ValueError("default dtype must be float32 or float64")
    _default_dtype = dtype.type


def get_default_dtype():
    return _default_dtype


@contextlib.contextmanager
def using_dtype(dtype):
    """Temporarily switch the default dtype (used by verification suites)."""
    global _default_dtype
    old = _default_dtype
    set_default_dtype(dtype)
    try:
        yield
    finally:
        _default_dtype = old


def set_finite_checks(on: bool) -> None:
    """Validate that every op output is finite; off by default for speed."""
    global _finite_checks
    _finite_checks = bool(on)


def finite_checks_enabled() -> bool:
    return _finite_checks


@contextlib.contextmanager
def no_grad():
    """Disable graph construction inside the block (evaluation fast path)."""
    global _grad_enabled
    old = _grad_enabled
    _grad_enabled = False
    try:
        yield
    finally:
        _grad_enabled = old


def grad_enabled() -> bool:
    return _grad_enabled


def _as_array(data, dtype=None):
    if isinstance(data, np.ndarray) and dtype is None:
        if data.dtype in (np.float32, np.float64):
            return data
        return data.astype(_default_dtype)
    return np.asarray(data, dtype=dtype or _default_dtype)


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Reduce a broadcasted gradient back to ``shape``."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and grad.shape[i] > 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


class Tensor:
    """N-dimensional array node in a computation graph.

    ``requires_grad`` marks leaves whose gradient should be accumulated;
    intermediate results require gradients whenever any input does.  ``grad``
    is lazily allocated by :meth:`backward` and accumulates across calls
    until :meth:`zero_grad`.
    """

    __slots__ = ("data", "grad", "requires_grad", "_backward", "_prev", "_op")

    def __init__(self, data, requires_grad: bool = False, dtype=None):
        self.data = _as_array(data, dtype)
        self.grad: np.ndarray | None = None
        self.requires_grad = bool(requires_grad)
        self._backward = None
        self._prev: tuple[Tensor, ...] = ()
        self._op = "leaf"

    # -- construction helpers -------------------------------------------------

    @classmethod
    def _from_op(cls, data, prev, op, backward):
        out = cls.__new__(cls)
        out.data = data
        out.grad = None
        out.requires_grad = _grad_enabled and any(p.requires_grad for p in prev)
        if out.requires_grad:
            out._prev = tuple(prev)
            out._backward = backward
        else:
            out._prev = ()
            out._backward = None
        out._op = op
        if _finite_checks and not np.all(np.isfinite(data)):
            raise NumericError(f"non-finite values produced by '{op}'")
        return out

    @staticmethod
    def zeros(shape, requires_grad=False):
        return Tensor(np.zeros(shape, dtype=_default_dtype), requires_grad)

    @staticmethod
    def ones(shape, requires_grad=False):
        return Tensor(np.ones(shape, dtype=_default_dtype), requires_grad)

    # -- basic introspection ---------------------------------------------------

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def size(self):
        return self.data.size

    @property
    def dtype(self):
        return self.data.dtype

    def __repr__(self):
        return f"Tensor(shape={self.shape}, op={self._op}, requires_grad={self.requires_grad})"

    def item(self) -> float:
        return float(self.data)

    def detach(self) -> "Tensor":
        """Same values, cut off from the graph."""
        return Tensor(self.data)

    def zero_grad(self) -> None:
        self.grad = None

    def _accumulate(self, g: np.ndarray) -> None:
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        self.grad += g

    # -- autograd --------------------------------------------------------------

    def backward(self) -> None:
        """Reverse-mode sweep from a scalar.

        Gradients accumulate into ``.grad`` of every reachable tensor with
        ``requires_grad``; call repeatedly to sum contributions.
        """
        if self.data.size != 1:
            raise ValueError("backward() requires a scalar tensor")
        topo: list[Tensor] = []
        visited: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, processed = stack.pop()
            if processed:
                topo.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            stack.append((node, True))
            for p in node._prev:
                if id(p) not in visited and p.requires_grad:
                    stack.append((p, False))

        grads: dict[int, np.ndarray] = {id(self): np.ones_like(self.data)}
        for node in reversed(topo):
            g = grads.pop(id(node), None)
            if g is None:
                continue
            if node._backward is None:
                node._accumulate(g)
                continue
            if not node._prev:
                node._accumulate(g)
                continue
            for p, pg in zip(node._prev, node._backward(g)):
                if pg is None or not p.requires_grad:
                    continue
                if p._backward is None:
                    p._accumulate(pg)
                elif id(p) in grads:
                    grads[id(p)] = grads[id(p)] + pg
                else:
                    grads[id(p)] = pg

    # -- arithmetic ------------------------------------------------------------

    def _coerce(self, other) -> "Tensor":
        return other if isinstance(other, Tensor) else Tensor(np.asarray(other, dtype=self.data.dtype))

    def __add__(self, other):
        other = self._coerce(other)
        a, b = self, other

        def backward(g):
            return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

        return Tensor._from_op(a.data + b.data, (a, b), "add", backward)

    __radd__ = __add__

    def __neg__(self):
        a = self
        return Tensor._from_op(-a.data, (a,), "neg", lambda g: (-g,))

    def __sub__(self, other):
        other = self._coerce(other)
        a, b = self, other

        def backward(g):
            return _unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)

        return Tensor._from_op(a.data - b.data, (a, b), "sub", backward)

    def __rsub__(self, other):
        return self._coerce(other).__sub__(self)

    def __mul__(self, other):
        other = self._coerce(other)
        a, b = self, other

        def backward(g):
            return _unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)

        return Tensor._from_op(a.data * b.data, (a, b), "mul", backward)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = self._coerce(other)
        a, b = self, other

        def backward(g):
            ga = _unbroadcast(g / b.data, a.shape)
            gb = _unbroadcast(-g * a.data / (b.data * b.data), b.shape)
            return ga, gb

        return Tensor._from_op(a.data / b.data, (a, b), "div", backward)

    def __pow__(self, exponent):
        if not isinstance(exponent, (int, float)):
            raise TypeError("only constant exponents are supported")
        a = self
        out = a.data ** exponent

        def backward(g):
            return (g * exponent * a.data ** (exponent - 1),)

        return Tensor._from_op(out, (a,), "pow", backward)

    def __matmul__(self, other):
        other = self._coerce(other)
        a, b = self, other
        if a.ndim != 2 or b.ndim != 2:
            raise ShapeError("matmul expects 2-D tensors")
        if a.shape[1] != b.shape[0]:
            raise ShapeError(f"matmul inner dimensions differ: {a.shape} @ {b.shape}")

        def backward(g):
            return g @ b.data.T, a.data.T @ g

        return Tensor._from_op(a.data @ b.data, (a, b), "matmul", backward)

    # -- reductions and shaping --------------------------------------------------

    def sum(self):
        a = self
        return Tensor._from_op(
            np.asarray(a.data.sum(), dtype=a.data.dtype),
            (a,),
            "sum",
            lambda g: (np.broadcast_to(g, a.shape).astype(a.data.dtype, copy=False),),
        )

    def mean(self):
        a = self
        n = a.data.size
        return Tensor._from_op(
            np.asarray(a.data.mean(), dtype=a.data.dtype),
            (a,),
            "mean",
            lambda g: ((np.broadcast_to(g, a.shape) / n).astype(a.data.dtype, copy=False),),
        )

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        a = self
        old = a.shape
        return Tensor._from_op(
            a.data.reshape(shape), (a,), "reshape", lambda g: (g.reshape(old),)
        )

    def transpose2d(self):
        if self.ndim != 2:
            raise ShapeError("transpose2d expects a 2-D tensor")
        a = self
        return Tensor._from_op(a.data.T, (a,), "transpose2d", lambda g: (g.T,))

    # -- activation method forms (defined below as free functions) ----------------

    def relu(self):
        return relu(self)

    def leaky_relu(self, slope: float = 0.2):
        return leaky_relu(self, slope)

    def tanh(self):
        return tanh(self)

    def sigmoid(self):
        return sigmoid(self)

    def softplus(self):
        return softplus(self)


def narrow_channels(x: Tensor, start: int, stop: int) -> Tensor:
    """Slice channels [start, stop) of an NCHW tensor."""
    if not 0 <= start <= stop <= x.shape[1]:
        raise ShapeError(f"channel range [{start}, {stop}) out of bounds for {x.shape}")

    def backward(g):
        gx = np.zeros_like(x.data)
        gx[:, start:stop] = g
        return (gx,)

    return Tensor._from_op(np.ascontiguousarray(x.data[:, start:stop]), (x,), "narrow", backward)


def concat_channels(a: Tensor, b: Tensor) -> Tensor:
    """Concatenate two NCHW tensors along the channel axis."""
    if a.shape[0] != b.shape[0] or a.shape[2:] != b.shape[2:]:
        raise ShapeError(f"cannot concat {a.shape} with {b.shape}")
    ca = a.shape[1]

    def backward(g):
        return g[:, :ca], g[:, ca:]

    return Tensor._from_op(np.concatenate([a.data, b.data], axis=1), (a, b), "concat", backward)


# -- element-wise activations -------------------------------------------------


def relu(x: Tensor) -> Tensor:
    mask = x.data > 0
    return Tensor._from_op(x.data * mask, (x,), "relu", lambda g: (g * mask,))


def leaky_relu(x: Tensor, slope: float = 0.2) -> Tensor:
    factor = np.where(x.data > 0, x.data.dtype.type(1), x.data.dtype.type(slope))
    return Tensor._from_op(x.data * factor, (x,), "leaky_relu", lambda g: (g * factor,))


def tanh(x: Tensor) -> Tensor:
    y = np.tanh(x.data)
    return Tensor._from_op(y, (x,), "tanh", lambda g: (g * (1.0 - y * y),))


def sigmoid(x: Tensor) -> Tensor:
    y = _sigmoid_array(x.data)
    return Tensor._from_op(y, (x,), "sigmoid", lambda g: (g * y * (1.0 - y),))


def softplus(x: Tensor) -> Tensor:
    """log(1 + exp(x)) in the overflow-safe form max(x,0) + log1p(exp(-|x|))."""
    d = x.data
    y = np.maximum(d, 0) + np.log1p(np.exp(-np.abs(d)))
    sig = _sigmoid_array(d)
    return Tensor._from_op(y, (x,), "softplus", lambda g: (g * sig,))


def _sigmoid_array(d: np.ndarray) -> np.ndarray:
    out = np.empty_like(d)
    pos = d >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-d[pos]))
    e = np.exp(d[~pos])
    out[~pos] = e / (1.0 + e)
    return out

"""Minimal reverse-mode automatic differentiation over float64 numpy arrays.

A :class:`Tensor` wraps a dense ``numpy`` array plus an optional backward
closure. Operations build a DAG; :func:`backward` runs a single reverse sweep
from a scalar root and accumulates ``.grad`` arrays on every tensor that
requires gradients. Everything is 64-bit and deterministic: no op introduces
randomness, and reductions use numpy's fixed evaluation order.
"""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

from .errors import ShapeError

__all__ = [
    "Tensor",
    "astensor",
    "constant",
    "backward",
    "zero_grads",
    "add",
    "sub",
    "mul",
    "div",
    "neg",
    "matmul",
    "tensor_sum",
    "tensor_mean",
    "tensor_max",
    "tanh",
    "sigmoid",
    "exp",
    "log",
    "sqrt",
    "relu",
    "softmax",
    "log_softmax",
    "concat",
    "stack",
    "gather_rows",
    "take_pairs",
    "slice_axis0",
    "transpose",
    "reshape",
]


class Tensor:
    """Dense float64 array with optional reverse-mode gradient tracking."""

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_vjp")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad: np.ndarray | None = None
        self.requires_grad = bool(requires_grad)
        self._parents: tuple[Tensor, ...] = ()
        self._vjp = None

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        return float(self.data)

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        flag = ", grad" if self.requires_grad else ""
        return f"Tensor(shape={self.data.shape}{flag})"

    # Arithmetic sugar; all dispatch to the module-level ops.
    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __truediv__(self, other):
        return div(self, other)

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)


def astensor(x) -> Tensor:
    if isinstance(x, Tensor):
        return x
    return Tensor(x)


def constant(x) -> Tensor:
    """A tensor that never tracks gradients (input data, masks, weights)."""
    return Tensor(x, requires_grad=False)


def _from_op(data: np.ndarray, parents: tuple[Tensor, ...], vjp) -> Tensor:
    out = Tensor.__new__(Tensor)
    out.data = data
    out.grad = None
    if any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = parents
        out._vjp = vjp
    else:
        out.requires_grad = False
        out._parents = ()
        out._vjp = None
    return out


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum `grad` down to `shape` (inverse of numpy broadcasting)."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad


def backward(root: Tensor) -> None:
    """Reverse sweep from a scalar root, accumulating into ``.grad``."""
    if root.data.size != 1:
        raise ShapeError(f"backward root must be scalar, got shape {root.data.shape}")
    if not root.requires_grad:
        return

    # Iterative post-order topological sort (LSTM chains can be deep).
    topo: list[Tensor] = []
    visited: set[int] = set()
    stack: list[tuple[Tensor, int]] = [(root, 0)]
    while stack:
        node, child_idx = stack.pop()
        if child_idx == 0:
            if id(node) in visited:
                continue
            visited.add(id(node))
        if child_idx < len(node._parents):
            stack.append((node, child_idx + 1))
            child = node._parents[child_idx]
            if id(child) not in visited and child.requires_grad:
                stack.append((child, 0))
        else:
            topo.append(node)

    root.grad = np.ones_like(root.data)
    for node in reversed(topo):
        if node._vjp is None or node.grad is None:
            continue
        for parent, grad in zip(node._parents, node._vjp(node.grad)):
            if grad is None or not parent.requires_grad:
                continue
            if parent.grad is None:
                parent.grad = grad.copy() if grad.base is not None else grad
            else:
                parent.grad = parent.grad + grad


def zero_grads(tensors: Iterable[Tensor]) -> None:
    for t in tensors:
        t.grad = None


# ---------------------------------------------------------------------------
# elementwise arithmetic


def add(a, b) -> Tensor:
    a, b = astensor(a), astensor(b)
    data = a.data + b.data

    def vjp(g):
        return _unbroadcast(g, a.data.shape), _unbroadcast(g, b.data.shape)

    return _from_op(data, (a, b), vjp)


def sub(a, b) -> Tensor:
    a, b = astensor(a), astensor(b)
    data = a.data - b.data

    def vjp(g):
        return _unbroadcast(g, a.data.shape), -_unbroadcast(g, b.data.shape)

    return _from_op(data, (a, b), vjp)


def mul(a, b) -> Tensor:
    a, b = astensor(a), astensor(b)
    data = a.data * b.data

    def vjp(g):
        return (
            _unbroadcast(g * b.data, a.data.shape),
            _unbroadcast(g * a.data, b.data.shape),
        )

    return _from_op(data, (a, b), vjp)


def div(a, b) -> Tensor:
    a, b = astensor(a), astensor(b)
    data = a.data / b.data

    def vjp(g):
        return (
            _unbroadcast(g / b.data, a.data.shape),
            _unbroadcast(-g * a.data / (b.data * b.data), b.data.shape),
        )

    return _from_op(data, (a, b), vjp)


def neg(a) -> Tensor:
    a = astensor(a)
    return _from_op(-a.data, (a,), lambda g: (-g,))


def matmul(a, b) -> Tensor:
    """Matrix product for the 1-D/2-D shape combinations numpy supports."""
    a, b = astensor(a), astensor(b)
    if a.data.ndim not in (1, 2) or b.data.ndim not in (1, 2):
        raise ShapeError(f"matmul supports 1-D/2-D operands, got {a.shape} @ {b.shape}")
    try:
        data = a.data @ b.data
    except ValueError as exc:
        raise ShapeError(f"matmul shape mismatch: {a.shape} @ {b.shape}") from exc
    a_nd, b_nd = a.data.ndim, b.data.ndim

    def vjp(g):
        if a_nd == 2 and b_nd == 2:
            return g @ b.data.T, a.data.T @ g
        if a_nd == 1 and b_nd == 2:
            return b.data @ g, np.outer(a.data, g)
        if a_nd == 2 and b_nd == 1:
            return np.outer(g, b.data), a.data.T @ g
        return g * b.data, g * a.data  # 1-D dot

    return _from_op(data, (a, b), vjp)


# ---------------------------------------------------------------------------
# reductions


def tensor_sum(a, axis: int | None = None) -> Tensor:
    a = astensor(a)
    data = a.data.sum(axis=axis)

    def vjp(g):
        if axis is None:
            return (np.broadcast_to(g, a.data.shape),)
        return (np.broadcast_to(np.expand_dims(g, axis), a.data.shape),)

    return _from_op(data, (a,), vjp)


def tensor_mean(a, axis: int | None = None) -> Tensor:
    a = astensor(a)
    count = a.data.size if axis is None else a.data.shape[axis]
    data = a.data.mean(axis=axis)

    def vjp(g):
        if axis is None:
            return (np.broadcast_to(g / count, a.data.shape),)
        return (np.broadcast_to(np.expand_dims(g, axis) / count, a.data.shape),)

    return _from_op(data, (a,), vjp)


def tensor_max(a, axis: int) -> Tensor:
    """Max along `axis`; ties route the gradient to the smallest index."""
    a = astensor(a)
    data = a.data.max(axis=axis)
    idx = a.data.argmax(axis=axis)

    def vjp(g):
        out = np.zeros_like(a.data)
        if a.data.ndim == 1:
            out[idx] = g
        else:
            grid = np.indices(data.shape)
            sel = list(grid)
            sel.insert(axis if axis >= 0 else a.data.ndim + axis, idx)
            out[tuple(sel)] = g
        return (out,)

    return _from_op(data, (a,), vjp)


# ---------------------------------------------------------------------------
# elementwise nonlinearities


def tanh(a) -> Tensor:
    a = astensor(a)
    data = np.tanh(a.data)
    return _from_op(data, (a,), lambda g: (g * (1.0 - data * data),))


def sigmoid(a) -> Tensor:
    a = astensor(a)
    data = 1.0 / (1.0 + np.exp(-a.data))
    return _from_op(data, (a,), lambda g: (g * data * (1.0 - data),))


def exp(a) -> Tensor:
    a = astensor(a)
    data = np.exp(a.data)
    return _from_op(data, (a,), lambda g: (g * data,))


def log(a) -> Tensor:
    a = astensor(a)
    return _from_op(np.log(a.data), (a,), lambda g: (g / a.data,))


def sqrt(a) -> Tensor:
    a = astensor(a)
    data = np.sqrt(a.data)
    return _from_op(data, (a,), lambda g: (g * 0.5 / data,))


def relu(a) -> Tensor:
    a = astensor(a)
    data = np.maximum(a.data, 0.0)
    return _from_op(data, (a,), lambda g: (g * (a.data > 0.0),))


# ---------------------------------------------------------------------------
# softmax family


def softmax(a, axis: int = -1) -> Tensor:
    """Numerically stable softmax along `axis` (max-subtraction)."""
    a = astensor(a)
    if a.data.size == 0:
        raise ValueError("softmax of an empty vector is undefined")
    shifted = a.data - a.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    data = e / e.sum(axis=axis, keepdims=True)

    def vjp(g):
        inner = (g * data).sum(axis=axis, keepdims=True)
        return ((g - inner) * data,)

    return _from_op(data, (a,), vjp)


def log_softmax(a, axis: int = -1) -> Tensor:
    a = astensor(a)
    if a.data.size == 0:
        raise ValueError("log_softmax of an empty vector is undefined")
    shifted = a.data - a.data.max(axis=axis, keepdims=True)
    lse = np.log(np.exp(shifted).sum(axis=axis, keepdims=True))
    data = shifted - lse

    def vjp(g):
        return (g - np.exp(data) * g.sum(axis=axis, keepdims=True),)

    return _from_op(data, (a,), vjp)


# ---------------------------------------------------------------------------
# shape / selection


def concat(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    tensors = [astensor(t) for t in tensors]
    data = np.concatenate([t.data for t in tensors], axis=axis)
    sizes = [t.data.shape[axis] for t in tensors]
    offsets = np.cumsum([0] + sizes)

    def vjp(g):
        return tuple(
            np.take(g, np.arange(offsets[i], offsets[i + 1]), axis=axis)
            for i in range(len(tensors))
        )

    return _from_op(data, tuple(tensors), vjp)


def stack(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    tensors = [astensor(t) for t in tensors]
    data = np.stack([t.data for t in tensors], axis=axis)

    def vjp(g):
        return tuple(np.take(g, i, axis=axis) for i in range(len(tensors)))

    return _from_op(data, tuple(tensors), vjp)


def gather_rows(a, indices) -> Tensor:
    """Select rows `a[indices]` (integer array); scatter-add on backward."""
    a = astensor(a)
    idx = np.asarray(indices, dtype=np.intp)
    data = a.data[idx]

    def vjp(g):
        out = np.zeros_like(a.data)
        np.add.at(out, idx, g)
        return (out,)

    return _from_op(data, (a,), vjp)


def take_pairs(a, rows, cols) -> Tensor:
    """Select `a[rows[i], cols[i]]` for each i, returning a 1-D tensor."""
    a = astensor(a)
    r = np.asarray(rows, dtype=np.intp)
    c = np.asarray(cols, dtype=np.intp)
    data = a.data[r, c]

    def vjp(g):
        out = np.zeros_like(a.data)
        np.add.at(out, (r, c), g)
        return (out,)

    return _from_op(data, (a,), vjp)


def slice_axis0(a, start: int, stop: int) -> Tensor:
    a = astensor(a)
    data = a.data[start:stop]

    def vjp(g):
        out = np.zeros_like(a.data)
        out[start:stop] = g
        return (out,)

    return _from_op(data, (a,), vjp)


def transpose(a) -> Tensor:
    a = astensor(a)
    return _from_op(a.data.T, (a,), lambda g: (g.T,))


def reshape(a, shape: tuple[int, ...]) -> Tensor:
    a = astensor(a)
    data = a.data.reshape(shape)
    return _from_op(data, (a,), lambda g: (g.reshape(a.data.shape),))

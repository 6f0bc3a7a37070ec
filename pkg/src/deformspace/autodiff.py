"""Minimal reverse-mode automatic differentiation on numpy arrays.

Graph-based: every op returns a Var holding the forward value plus closures
that push the output gradient to each parent. No tape object; `backward`
walks the graph in reverse topological order. Everything is float64 and
deterministic. Supports exactly the ops the networks and losses need.
"""
from __future__ import annotations

import numpy as np

from .errors import UsageError


class Var:
    __slots__ = ("data", "grad", "_edges")

    def __init__(self, data, edges=()):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = None
        self._edges = edges  # tuple of (parent Var, fn: out_grad -> parent_grad)

    @property
    def shape(self):
        return self.data.shape

    # -- arithmetic ---------------------------------------------------------
    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return div(self, other)

    def __neg__(self):
        return mul(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)


def const(x) -> Var:
    return x if isinstance(x, Var) else Var(x)


def _unbroadcast(g: np.ndarray, shape) -> np.ndarray:
    """Reduce a broadcasted gradient back to `shape`."""
    g = np.asarray(g)
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for i, s in enumerate(shape):
        if s == 1 and g.shape[i] != 1:
            g = g.sum(axis=i, keepdims=True)
    return g


def add(a, b) -> Var:
    a, b = const(a), const(b)
    return Var(
        a.data + b.data,
        (
            (a, lambda g: _unbroadcast(g, a.data.shape)),
            (b, lambda g: _unbroadcast(g, b.data.shape)),
        ),
    )


def sub(a, b) -> Var:
    a, b = const(a), const(b)
    return Var(
        a.data - b.data,
        (
            (a, lambda g: _unbroadcast(g, a.data.shape)),
            (b, lambda g: _unbroadcast(-g, b.data.shape)),
        ),
    )


def mul(a, b) -> Var:
    a, b = const(a), const(b)
    return Var(
        a.data * b.data,
        (
            (a, lambda g: _unbroadcast(g * b.data, a.data.shape)),
            (b, lambda g: _unbroadcast(g * a.data, b.data.shape)),
        ),
    )


def div(a, b) -> Var:
    a, b = const(a), const(b)
    return Var(
        a.data / b.data,
        (
            (a, lambda g: _unbroadcast(g / b.data, a.data.shape)),
            (b, lambda g: _unbroadcast(-g * a.data / (b.data * b.data), b.data.shape)),
        ),
    )


def matmul(a, b) -> Var:
    a, b = const(a), const(b)

    def ga(g):
        return _unbroadcast(np.matmul(g, np.swapaxes(b.data, -1, -2)), a.data.shape)

    def gb(g):
        return _unbroadcast(np.matmul(np.swapaxes(a.data, -1, -2), g), b.data.shape)

    return Var(np.matmul(a.data, b.data), ((a, ga), (b, gb)))


def relu(a) -> Var:
    a = const(a)
    mask = a.data > 0
    return Var(np.where(mask, a.data, 0.0), ((a, lambda g: g * mask),))


def sin(a) -> Var:
    a = const(a)
    return Var(np.sin(a.data), ((a, lambda g: g * np.cos(a.data)),))


def cos(a) -> Var:
    a = const(a)
    return Var(np.cos(a.data), ((a, lambda g: -g * np.sin(a.data)),))


def sqrt(a) -> Var:
    a = const(a)
    out = np.sqrt(a.data)
    return Var(out, ((a, lambda g: g * 0.5 / out),))


def vsum(a, axis=None, keepdims=False) -> Var:
    a = const(a)

    def ga(g):
        if axis is None:
            return np.broadcast_to(g, a.data.shape).copy()
        gg = g if keepdims else np.expand_dims(g, axis)
        return np.broadcast_to(gg, a.data.shape).copy()

    return Var(a.data.sum(axis=axis, keepdims=keepdims), ((a, ga),))


def vmean(a, axis=None, keepdims=False) -> Var:
    a = const(a)
    count = a.data.size if axis is None else a.data.shape[axis]
    return mul(vsum(a, axis=axis, keepdims=keepdims), 1.0 / count)


def vmax(a, axis: int) -> Var:
    """Max along an axis; gradient routes to the first argmax (deterministic)."""
    a = const(a)
    idx = np.argmax(a.data, axis=axis)

    def ga(g):
        out = np.zeros_like(a.data)
        np.put_along_axis(
            out, np.expand_dims(idx, axis), np.expand_dims(g, axis), axis=axis
        )
        return out

    return Var(np.take_along_axis(a.data, np.expand_dims(idx, axis), axis=axis).squeeze(axis), ((a, ga),))


def reshape(a, shape) -> Var:
    a = const(a)
    old = a.data.shape
    return Var(a.data.reshape(shape), ((a, lambda g: g.reshape(old)),))


def transpose(a, axes) -> Var:
    a = const(a)
    inv = np.argsort(axes)
    return Var(a.data.transpose(axes), ((a, lambda g: g.transpose(inv)),))


def concat(vs, axis: int) -> Var:
    vs = [const(v) for v in vs]
    sizes = [v.data.shape[axis] for v in vs]
    offsets = np.cumsum([0] + sizes)

    def make_edge(i, v):
        def gv(g):
            sl = [slice(None)] * g.ndim
            sl[axis] = slice(offsets[i], offsets[i + 1])
            return g[tuple(sl)]

        return (v, gv)

    return Var(
        np.concatenate([v.data for v in vs], axis=axis),
        tuple(make_edge(i, v) for i, v in enumerate(vs)),
    )


def gather_points(a, idx: np.ndarray) -> Var:
    """Index rows of point arrays with fixed integer indices.

    a: (n, d) with idx (m,) -> (m, d), or batched a: (B, n, d) with
    idx (B, m) -> (B, m, d). Backward scatter-adds.
    """
    a = const(a)
    idx = np.asarray(idx)
    if a.data.ndim == 2:

        def ga(g):
            out = np.zeros_like(a.data)
            np.add.at(out, idx, g)
            return out

        return Var(a.data[idx], ((a, ga),))
    if a.data.ndim == 3 and idx.ndim == 2:
        bidx = np.arange(a.data.shape[0])[:, None]

        def ga3(g):
            out = np.zeros_like(a.data)
            np.add.at(out, (bidx, idx), g)
            return out

        return Var(a.data[bidx, idx], ((a, ga3),))
    raise UsageError(f"gather_points: unsupported shapes {a.data.shape} / {idx.shape}")


def slice_axis(a, axis: int, start: int, stop: int) -> Var:
    a = const(a)
    sl = [slice(None)] * a.data.ndim
    sl[axis] = slice(start, stop)
    sl = tuple(sl)

    def ga(g):
        out = np.zeros_like(a.data)
        out[sl] = g
        return out

    return Var(a.data[sl], ((a, ga),))


def select(mask: np.ndarray, a, b) -> Var:
    """Elementwise mask ? a : b with a constant mask (no gradient through it)."""
    a, b = const(a), const(b)
    return Var(
        np.where(mask, a.data, b.data),
        (
            (a, lambda g: _unbroadcast(np.where(mask, g, 0.0), a.data.shape)),
            (b, lambda g: _unbroadcast(np.where(mask, 0.0, g), b.data.shape)),
        ),
    )


def cross(a, b) -> Var:
    """Cross product along the last axis (size 3)."""
    a, b = const(a), const(b)
    return Var(
        np.cross(a.data, b.data),
        (
            (a, lambda g: _unbroadcast(np.cross(b.data, g), a.data.shape)),
            (b, lambda g: _unbroadcast(np.cross(g, a.data), b.data.shape)),
        ),
    )


def backward(root: Var) -> None:
    """Accumulate gradients of `root` (a scalar) into every reachable Var."""
    if root.data.size != 1:
        raise UsageError("backward expects a scalar loss")
    order: list[Var] = []
    seen: set[int] = set()
    stack: list[tuple[Var, bool]] = [(root, False)]
    while stack:
        node, done = stack.pop()
        if done:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for parent, _ in node._edges:
            if id(parent) not in seen:
                stack.append((parent, False))
    root.grad = np.ones_like(root.data)
    for node in reversed(order):
        if node.grad is None:
            continue
        for parent, fn in node._edges:
            g = fn(node.grad)
            # First contribution is kept by reference (vjp outputs are never
            # mutated later); subsequent ones allocate a fresh sum.
            parent.grad = g if parent.grad is None else parent.grad + g

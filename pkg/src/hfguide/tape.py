"""Minimal reverse-mode autodiff over a fixed primitive set.

Nodes wrap float64 ndarrays. The primitive set covers what the toy models
need: add/mul (broadcasting), scalar scale, matmul, transpose, reshape,
concat, conv2d, nearest upsampling, relu/tanh, softmax, clip-to-[0,1],
sum. Gradients are accumulated by reverse topological sweep; `backward`
accepts an explicit cotangent so external gradients (e.g. the analytic
fidelity gradient) can seed the sweep.
"""
from __future__ import annotations

import numpy as np

from . import kernels
from .errors import InvalidArgumentError


def _unbroadcast(grad, shape):
    """Sum `grad` down to `shape` (reverse of numpy broadcasting)."""
    if grad.shape == tuple(shape):
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad


class Node:
    __slots__ = ("value", "grad", "parents", "_vjp", "requires_grad")

    def __init__(self, value, parents=(), vjp=None, requires_grad=False):
        self.value = np.asarray(value, dtype=np.float64)
        self.grad = None
        self.parents = parents
        self._vjp = vjp
        self.requires_grad = requires_grad or any(p.requires_grad for p in parents)

    @property
    def shape(self):
        return self.value.shape

    def backward(self, cotangent=None):
        if cotangent is None:
            if self.value.ndim != 0:
                raise InvalidArgumentError("backward() on a non-scalar needs a cotangent")
            cotangent = np.array(1.0)
        cotangent = np.asarray(cotangent, dtype=np.float64)
        if cotangent.shape != self.value.shape:
            raise InvalidArgumentError("cotangent shape mismatch")
        order = []
        seen = set()

        def visit(node):
            stack = [(node, False)]
            while stack:
                n, done = stack.pop()
                if done:
                    order.append(n)
                    continue
                if id(n) in seen or not n.requires_grad:
                    continue
                seen.add(id(n))
                stack.append((n, True))
                for p in n.parents:
                    stack.append((p, False))

        visit(self)
        for n in order:
            n.grad = np.zeros_like(n.value)
        self.grad = cotangent.copy()
        for n in reversed(order):
            if n._vjp is not None:
                n._vjp(n.grad)

    # -- operator sugar -------------------------------------------------
    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return add(self, scale(as_node(other), -1.0))

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return scale(self, float(other))
        return mul(self, other)

    __rmul__ = __mul__


def as_node(x):
    return x if isinstance(x, Node) else Node(x)


def param(value):
    """A leaf that accumulates gradient."""
    return Node(np.array(value, dtype=np.float64), requires_grad=True)


def constant(value):
    return Node(value)


# -- primitives ---------------------------------------------------------

def add(a, b):
    a, b = as_node(a), as_node(b)
    out = Node(a.value + b.value, (a, b))

    def vjp(g):
        if a.requires_grad:
            a.grad += _unbroadcast(g, a.value.shape)
        if b.requires_grad:
            b.grad += _unbroadcast(g, b.value.shape)

    out._vjp = vjp
    return out


def mul(a, b):
    a, b = as_node(a), as_node(b)
    out = Node(a.value * b.value, (a, b))

    def vjp(g):
        if a.requires_grad:
            a.grad += _unbroadcast(g * b.value, a.value.shape)
        if b.requires_grad:
            b.grad += _unbroadcast(g * a.value, b.value.shape)

    out._vjp = vjp
    return out


def scale(a, s):
    a = as_node(a)
    s = float(s)
    out = Node(a.value * s, (a,))

    def vjp(g):
        if a.requires_grad:
            a.grad += g * s

    out._vjp = vjp
    return out


def matmul(a, b):
    a, b = as_node(a), as_node(b)
    if a.value.ndim != 2 or b.value.ndim != 2:
        raise InvalidArgumentError("matmul expects 2-d operands")
    out = Node(a.value @ b.value, (a, b))

    def vjp(g):
        if a.requires_grad:
            a.grad += g @ b.value.T
        if b.requires_grad:
            b.grad += a.value.T @ g

    out._vjp = vjp
    return out


def transpose(a, axes=None):
    a = as_node(a)
    out = Node(np.transpose(a.value, axes), (a,))
    inv = None if axes is None else np.argsort(axes)

    def vjp(g):
        if a.requires_grad:
            a.grad += np.transpose(g, inv)

    out._vjp = vjp
    return out


def reshape(a, shape):
    a = as_node(a)
    out = Node(a.value.reshape(shape), (a,))

    def vjp(g):
        if a.requires_grad:
            a.grad += g.reshape(a.value.shape)

    out._vjp = vjp
    return out


def concat(nodes, axis=-1):
    nodes = [as_node(n) for n in nodes]
    out = Node(np.concatenate([n.value for n in nodes], axis=axis), tuple(nodes))
    sizes = [n.value.shape[axis] for n in nodes]
    splits = np.cumsum(sizes)[:-1]

    def vjp(g):
        parts = np.split(g, splits, axis=axis)
        for n, p in zip(nodes, parts):
            if n.requires_grad:
                n.grad += p

    out._vjp = vjp
    return out


def relu(a):
    a = as_node(a)
    out = Node(np.maximum(a.value, 0.0), (a,))

    def vjp(g):
        if a.requires_grad:
            a.grad += g * (a.value > 0)

    out._vjp = vjp
    return out


def tanh(a):
    a = as_node(a)
    y = np.tanh(a.value)
    out = Node(y, (a,))

    def vjp(g):
        if a.requires_grad:
            a.grad += g * (1.0 - y * y)

    out._vjp = vjp
    return out


def softmax(a, axis=-1):
    a = as_node(a)
    shifted = a.value - a.value.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    y = e / e.sum(axis=axis, keepdims=True)
    out = Node(y, (a,))

    def vjp(g):
        if a.requires_grad:
            dot = (g * y).sum(axis=axis, keepdims=True)
            a.grad += y * (g - dot)

    out._vjp = vjp
    return out


def clip01(a):
    """Hard clip to [0,1]; gradient is the a.e. subgradient (mask)."""
    a = as_node(a)
    out = Node(np.clip(a.value, 0.0, 1.0), (a,))
    mask = (a.value >= 0.0) & (a.value <= 1.0)

    def vjp(g):
        if a.requires_grad:
            a.grad += g * mask

    out._vjp = vjp
    return out


def conv2d(x, w, padding="zero"):
    """Correlation of x (H,W,Cin) with w (kh,kw,Cin,Cout), same-size output."""
    x, w = as_node(x), as_node(w)
    out = Node(kernels.conv2d_mc(x.value, w.value, padding), (x, w))
    kh, kw = w.value.shape[:2]

    def vjp(g):
        g = np.ascontiguousarray(g)
        if x.requires_grad:
            x.grad += kernels.conv2d_mc_grad_input(g, w.value, padding)
        if w.requires_grad:
            w.grad += kernels.conv2d_mc_grad_weights(g, x.value, kh, kw, padding)

    out._vjp = vjp
    return out


def upsample2(a):
    """Nearest-neighbour 2x upsampling of (H,W,C); adjoint is 2x2 block sum."""
    a = as_node(a)
    out = Node(np.repeat(np.repeat(a.value, 2, axis=0), 2, axis=1), (a,))

    def vjp(g):
        if a.requires_grad:
            h, w, c = a.value.shape
            a.grad += g.reshape(h, 2, w, 2, c).sum(axis=(1, 3))

    out._vjp = vjp
    return out


def asum(a):
    a = as_node(a)
    out = Node(np.asarray(a.value.sum()), (a,))

    def vjp(g):
        if a.requires_grad:
            a.grad += np.broadcast_to(g, a.value.shape)

    out._vjp = vjp
    return out


def gather(table, ids):
    """Row lookup table[ids]; the matmul-with-one-hot special case, done directly."""
    table = as_node(table)
    ids = np.asarray(ids, dtype=np.int64)
    out = Node(table.value[ids], (table,))

    def vjp(g):
        if table.requires_grad:
            np.add.at(table.grad, ids, g)

    out._vjp = vjp
    return out


def depth_to_space2(a):
    """(H,W,4*C) -> (2H,2W,C); channel blocks are (row, col) sub-positions."""
    h, w, c4 = as_node(a).shape
    if c4 % 4:
        raise InvalidArgumentError("depth_to_space2 needs channels divisible by 4")
    c = c4 // 4
    r = reshape(a, (h, w, 2, 2, c))
    r = transpose(r, (0, 2, 1, 3, 4))
    return reshape(r, (2 * h, 2 * w, c))


def space_to_depth2(a):
    """(2H,2W,C) -> (H,W,4*C); exact inverse of depth_to_space2."""
    h2, w2, c = as_node(a).shape
    if h2 % 2 or w2 % 2:
        raise InvalidArgumentError("space_to_depth2 needs even spatial dims")
    r = reshape(a, (h2 // 2, 2, w2 // 2, 2, c))
    r = transpose(r, (0, 2, 1, 3, 4))
    return reshape(r, (h2 // 2, w2 // 2, 4 * c))

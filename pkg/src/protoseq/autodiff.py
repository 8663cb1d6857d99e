"""Minimal reverse-mode autodiff over dense numpy arrays.

Define-by-run: every operation on a :class:`Tensor` records its parents and
a backward closure. Calling :meth:`Tensor.backward` on a scalar loss walks
the graph in reverse topological order and accumulates adjoints into
``.grad`` of every tensor with ``requires_grad=True``.

Everything is float64. Graphs are single-owner and rebuilt per step.
"""

from __future__ import annotations

import numpy as np


class GraphError(ValueError):
    """Shape or structure error in the computation graph, naming the op."""


def _as_array(x) -> np.ndarray:
    return np.asarray(x, dtype=np.float64)


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum `grad` down to `shape`, undoing numpy broadcasting."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


class Tensor:
    """A node in the computation graph holding a value and its adjoint."""

    __slots__ = ("value", "grad", "requires_grad", "_parents", "_backward", "op")

    def __init__(self, value, requires_grad=False, _parents=(), _backward=None, op="leaf"):
        self.value = _as_array(value)
        self.grad = None
        self.requires_grad = bool(requires_grad) or any(p.requires_grad for p in _parents)
        self._parents = _parents
        self._backward = _backward
        self.op = op

    @property
    def shape(self):
        return self.value.shape

    def __repr__(self):
        return f"Tensor(op={self.op}, shape={self.shape})"

    # -- graph construction helpers ------------------------------------

    @staticmethod
    def _coerce(x) -> "Tensor":
        return x if isinstance(x, Tensor) else Tensor(x)

    def _make(self, op, value, parents, backward):
        try:
            value = _as_array(value)
        except ValueError as e:  # pragma: no cover - defensive
            raise GraphError(f"{op}: {e}") from e
        return Tensor(value, _parents=parents, _backward=backward, op=op)

    # -- arithmetic -----------------------------------------------------

    def __add__(self, other):
        other = self._coerce(other)
        try:
            out_val = self.value + other.value
        except ValueError as e:
            raise GraphError(f"add: {self.shape} + {other.shape}: {e}") from e

        def backward(g):
            return (_unbroadcast(g, self.shape), _unbroadcast(g, other.shape))

        return self._make("add", out_val, (self, other), backward)

    __radd__ = __add__

    def __neg__(self):
        return self._make("neg", -self.value, (self,), lambda g: (-g,))

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) + (-self)

    def __mul__(self, other):
        other = self._coerce(other)
        try:
            out_val = self.value * other.value
        except ValueError as e:
            raise GraphError(f"mul: {self.shape} * {other.shape}: {e}") from e
        a, b = self, other

        def backward(g):
            return (_unbroadcast(g * b.value, a.shape), _unbroadcast(g * a.value, b.shape))

        return self._make("mul", out_val, (self, other), backward)

    __rmul__ = __mul__

    def matmul(self, other):
        other = self._coerce(other)
        try:
            out_val = self.value @ other.value
        except ValueError as e:
            raise GraphError(f"matmul: {self.shape} @ {other.shape}: {e}") from e
        a, b = self, other

        def backward(g):
            ga = g @ b.value.T if b.value.ndim == 2 else np.outer(g, b.value)
            gb = a.value.T @ g
            return (ga.reshape(a.shape), gb.reshape(b.shape))

        return self._make("matmul", out_val, (self, other), backward)

    __matmul__ = matmul

    # -- elementwise nonlinearities --------------------------------------

    def exp(self):
        out_val = np.exp(self.value)
        return self._make("exp", out_val, (self,), lambda g: (g * out_val,))

    def log(self):
        return self._make("log", np.log(self.value), (self,), lambda g: (g / self.value,))

    def tanh(self):
        out_val = np.tanh(self.value)
        return self._make("tanh", out_val, (self,), lambda g: (g * (1.0 - out_val**2),))

    def sigmoid(self):
        out_val = 1.0 / (1.0 + np.exp(-self.value))
        return self._make("sigmoid", out_val, (self,), lambda g: (g * out_val * (1.0 - out_val),))

    def sqrt(self):
        out_val = np.sqrt(self.value)

        def backward(g):
            # subgradient guard at 0
            return (g / (2.0 * np.maximum(out_val, 1e-12)),)

        return self._make("sqrt", out_val, (self,), backward)

    def abs(self):
        return self._make("abs", np.abs(self.value), (self,), lambda g: (g * np.sign(self.value),))

    def relu(self):
        mask = self.value > 0
        return self._make("relu", self.value * mask, (self,), lambda g: (g * mask,))

    def clip(self, lo, hi):
        """Clamp values; gradient passes through only inside [lo, hi]."""
        mask = (self.value >= lo) & (self.value <= hi)
        return self._make("clip", np.clip(self.value, lo, hi), (self,), lambda g: (g * mask,))

    # -- reductions and shaping ------------------------------------------

    def sum(self, axis=None, keepdims=False):
        out_val = self.value.sum(axis=axis, keepdims=keepdims)
        shape = self.shape

        def backward(g):
            if axis is None:
                return (np.broadcast_to(g, shape).copy(),)
            gg = g if keepdims else np.expand_dims(g, axis)
            return (np.broadcast_to(gg, shape).copy(),)

        return self._make("sum", out_val, (self,), backward)

    def reshape(self, *new_shape):
        shape = self.shape
        return self._make(
            "reshape", self.value.reshape(*new_shape), (self,), lambda g: (g.reshape(shape),)
        )

    def __getitem__(self, idx):
        try:
            out_val = self.value[idx]
        except IndexError as e:
            raise GraphError(f"getitem: index {idx!r} into shape {self.shape}: {e}") from e
        shape = self.shape

        def backward(g):
            full = np.zeros(shape)
            np.add.at(full, idx, g)
            return (full,)

        return self._make("getitem", out_val, (self,), backward)


def constant(value) -> Tensor:
    return Tensor(value)


def parameter(value) -> Tensor:
    return Tensor(value, requires_grad=True)


def concat(tensors, axis=0) -> Tensor:
    tensors = [Tensor._coerce(t) for t in tensors]
    try:
        out_val = np.concatenate([t.value for t in tensors], axis=axis)
    except ValueError as e:
        raise GraphError(f"concat: {[t.shape for t in tensors]}: {e}") from e
    sizes = [t.shape[axis] for t in tensors]
    offsets = np.cumsum([0] + sizes)

    def backward(g):
        slicer = [slice(None)] * g.ndim
        grads = []
        for i in range(len(sizes)):
            slicer[axis] = slice(offsets[i], offsets[i + 1])
            grads.append(g[tuple(slicer)])
        return tuple(grads)

    return Tensor(out_val, _parents=tuple(tensors), _backward=backward, op="concat")


def gaussian_kernel(e: Tensor, p: Tensor) -> Tensor:
    """Fused similarity a[b,i] = exp(-||e_b - p_i||^2).

    The gradient is expressed in terms of the cached output, keeping it
    stable for large distances (a -> 0 kills the gradient smoothly).
    """
    e = Tensor._coerce(e)
    p = Tensor._coerce(p)
    if e.value.ndim != 2 or p.value.ndim != 2 or e.shape[1] != p.shape[1]:
        raise GraphError(f"gaussian_kernel: incompatible shapes {e.shape} and {p.shape}")
    ev, pv = e.value, p.value
    d2 = (
        (ev * ev).sum(axis=1)[:, None]
        + (pv * pv).sum(axis=1)[None, :]
        - 2.0 * (ev @ pv.T)
    )
    out_val = np.exp(-np.maximum(d2, 0.0))

    def backward(g):
        ga = g * out_val  # (B, k)
        ge = -2.0 * (ev * ga.sum(axis=1)[:, None] - ga @ pv)
        gp = -2.0 * (pv * ga.sum(axis=0)[:, None] - ga.T @ ev)
        return (ge, gp)

    return Tensor(out_val, _parents=(e, p), _backward=backward, op="gaussian_kernel")


def _toposort(root: Tensor):
    order, seen, stack = [], set(), [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if id(p) not in seen and p.requires_grad:
                stack.append((p, False))
    return order


def backward(loss: Tensor) -> None:
    """Accumulate dloss/dt into t.grad for every reachable trainable tensor."""
    if loss.value.ndim != 0:
        raise GraphError(f"backward: loss must be scalar, got shape {loss.shape}")
    order = _toposort(loss)
    adjoints = {id(loss): np.ones(())}
    for node in reversed(order):
        g = adjoints.pop(id(node), None)
        if g is None:
            continue
        if node._backward is None:
            if node.requires_grad:
                node.grad = g if node.grad is None else node.grad + g
            continue
        for parent, pg in zip(node._parents, node._backward(g)):
            if not parent.requires_grad:
                continue
            key = id(parent)
            adjoints[key] = adjoints[key] + pg if key in adjoints else pg


def gradients(loss: Tensor, params: dict) -> dict:
    """Run backward and return {name: gradient array} for the given leaves."""
    for t in params.values():
        t.grad = None
    backward(loss)
    return {
        name: (t.grad if t.grad is not None else np.zeros_like(t.value))
        for name, t in params.items()
    }

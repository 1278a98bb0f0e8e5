# Copyright (c) 2025 Mahmood Khordoo
#
# This software is licensed under the MIT License.
# See the LICENSE file in the root directory for details.

"""
Reverse-mode automatic differentiation over numpy arrays.

A Tape records primitives in creation order; ``Tape.backward`` walks them
once in reverse, accumulating adjoints. Trainable leaves are ``Param``
objects that outlive any single tape: binding a Param to a tape yields a
leaf node, and backward adds the leaf adjoint into ``Param.grad``.

Operands may be nodes, numpy arrays, or Python scalars; non-node operands are
treated as constants. Every primitive is also usable on plain arrays, in
which case it simply returns the numpy result, so losses and residuals can be
written once for both training and evaluation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Literal, Optional, Sequence

import numpy as np

from finr.errors import CapabilityError, ContractError, ShapeError

ParamRole = Literal["weight", "bias", "core", "encoding-table", "channel-mix"]


@dataclass(eq=False)
class Param:
    """Trainable tensor with a gradient accumulator of the same shape."""

    name: str
    value: np.ndarray
    role: ParamRole = "weight"
    grad: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        self.value = np.asarray(self.value)
        if self.grad is None:
            self.grad = np.zeros_like(self.value)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.value.shape

    @property
    def size(self) -> int:
        return int(self.value.size)

    def zero_grad(self) -> None:
        self.grad = np.zeros_like(self.value)


class Node:
    """One recorded value on a tape."""

    __slots__ = ("tape", "index", "value", "kind", "parents", "vjp", "param", "requires_grad")

    def __init__(self, tape, value, kind, parents=(), vjp=None, param=None, requires_grad=False):
        self.tape = tape
        self.value = value
        self.kind = kind
        self.parents = parents
        self.vjp = vjp
        self.param = param
        self.requires_grad = requires_grad
        self.index = -1

    @property
    def shape(self) -> tuple[int, ...]:
        return self.value.shape

    @property
    def ndim(self) -> int:
        return self.value.ndim

    def __repr__(self) -> str:
        return f"Node(kind={self.kind!r}, shape={self.shape})"

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

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)

    def __rmatmul__(self, other):
        return matmul(other, self)

    def __getitem__(self, key):
        return index(self, key)


class Tape:
    """Append-only record of primitives for one forward pass."""

    def __init__(self, grad_enabled: bool = True):
        self.grad_enabled = grad_enabled
        self.nodes: list[Node] = []
        self._leaves: dict[int, Node] = {}

    def constant(self, value) -> Node:
        return Node(self, np.asarray(value), "constant")

    def param(self, p: Param) -> Node:
        """Leaf node for ``p``; the same Param always maps to the same leaf."""
        leaf = self._leaves.get(id(p))
        if leaf is None:
            leaf = Node(self, p.value, "param", param=p, requires_grad=self.grad_enabled)
            if self.grad_enabled:
                self._append(leaf)
            self._leaves[id(p)] = leaf
        return leaf

    def record(self, kind: str, value, parents: Sequence[Node], vjp: Callable) -> Node:
        live = self.grad_enabled and any(p.requires_grad for p in parents)
        if not live:
            return Node(self, value, kind)
        node = Node(self, value, kind, tuple(parents), vjp, requires_grad=True)
        self._append(node)
        return node

    def _append(self, node: Node) -> None:
        node.index = len(self.nodes)
        self.nodes.append(node)

    def backward(self, loss: Node) -> None:
        """Accumulate d(loss)/d(param) into every bound Param's gradient."""
        if not isinstance(loss, Node) or loss.tape is not self:
            raise ContractError("loss must be a node recorded on this tape")
        if loss.value.size != 1:
            raise ContractError(f"loss must be scalar, got shape {loss.shape}")
        if not loss.requires_grad:
            return

        adjoints: dict[int, np.ndarray] = {loss.index: np.ones_like(loss.value)}
        for node in reversed(self.nodes[: loss.index + 1]):
            g = adjoints.pop(node.index, None)
            if g is None:
                continue
            if node.param is not None:
                node.param.grad = node.param.grad + g.astype(node.param.grad.dtype, copy=False)
                continue
            grads = node.vjp(g)
            for parent, pg in zip(node.parents, grads):
                if pg is None or not parent.requires_grad:
                    continue
                prev = adjoints.get(parent.index)
                adjoints[parent.index] = pg if prev is None else prev + pg


def _tape_of(*operands) -> Optional[Tape]:
    for op in operands:
        if isinstance(op, Node):
            return op.tape
    return None


def _val(x):
    return x.value if isinstance(x, Node) else np.asarray(x)


def _lift(tape: Tape, x) -> Node:
    return x if isinstance(x, Node) else tape.constant(x)


def _unbroadcast(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, extent in enumerate(shape):
        if extent == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g


def _binary(kind, a, b, forward, vjp_factory):
    tape = _tape_of(a, b)
    if tape is None:
        return forward(_val(a), _val(b))
    a, b = _lift(tape, a), _lift(tape, b)
    value = forward(a.value, b.value)
    return tape.record(kind, value, (a, b), vjp_factory(a, b, value))


def _unary(kind, x, forward, vjp_factory):
    if not isinstance(x, Node):
        return forward(np.asarray(x))
    value = forward(x.value)
    return x.tape.record(kind, value, (x,), vjp_factory(x, value))


def add(a, b):
    return _binary(
        "add",
        a,
        b,
        np.add,
        lambda a, b, _: lambda g: (_unbroadcast(g, a.shape), _unbroadcast(g, b.shape)),
    )


def sub(a, b):
    return _binary(
        "sub",
        a,
        b,
        np.subtract,
        lambda a, b, _: lambda g: (_unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)),
    )


def mul(a, b):
    return _binary(
        "mul",
        a,
        b,
        np.multiply,
        lambda a, b, _: lambda g: (
            _unbroadcast(g * b.value, a.shape),
            _unbroadcast(g * a.value, b.shape),
        ),
    )


def neg(x):
    return _unary("neg", x, np.negative, lambda x, _: lambda g: (-g,))


def square(x):
    return _unary("square", x, np.square, lambda x, _: lambda g: (2.0 * x.value * g,))


def sqrt(x):
    def vjp_factory(x, y):
        def vjp(g):
            safe = np.where(y > 0, y, 1.0)
            return (np.where(y > 0, g / (2.0 * safe), 0.0),)

        return vjp

    return _unary("sqrt", x, np.sqrt, vjp_factory)


def absolute(x):
    return _unary("abs", x, np.abs, lambda x, _: lambda g: (g * np.sign(x.value),))


def sin(x):
    return _unary("sin", x, np.sin, lambda x, _: lambda g: (g * np.cos(x.value),))


def cos(x):
    return _unary("cos", x, np.cos, lambda x, _: lambda g: (-g * np.sin(x.value),))


def exp(x):
    return _unary("exp", x, np.exp, lambda x, y: lambda g: (g * y,))


def tanh(x):
    return _unary("tanh", x, np.tanh, lambda x, y: lambda g: (g * (1.0 - y * y),))


def matmul(a, b):
    def check(av, bv):
        if av.ndim != 2 or bv.ndim != 2 or av.shape[1] != bv.shape[0]:
            raise ShapeError(f"matmul shape mismatch: {av.shape} @ {bv.shape}")
        return av @ bv

    return _binary(
        "matmul",
        a,
        b,
        check,
        lambda a, b, _: lambda g: (g @ b.value.T, a.value.T @ g),
    )


def reduce_sum(x, axis=None):
    def vjp_factory(x, _):
        def vjp(g):
            if axis is not None:
                g = np.expand_dims(g, axis)
            return (np.broadcast_to(g, x.shape).copy(),)

        return vjp

    return _unary("sum", x, lambda v: np.sum(v, axis=axis), vjp_factory)


def mean(x):
    def vjp_factory(x, _):
        return lambda g: (np.full(x.shape, g / x.value.size, dtype=x.value.dtype),)

    return _unary("mean", x, lambda v: np.asarray(np.mean(v)), vjp_factory)


def reshape(x, shape):
    return _unary(
        "reshape",
        x,
        lambda v: np.reshape(v, shape),
        lambda x, _: lambda g: (np.reshape(g, x.shape),),
    )


def transpose(x, axes):
    inverse = tuple(np.argsort(axes))
    return _unary(
        "transpose",
        x,
        lambda v: np.transpose(v, axes),
        lambda x, _: lambda g: (np.transpose(g, inverse),),
    )


def index(x, key):
    def vjp_factory(x, _):
        def vjp(g):
            out = np.zeros_like(x.value)
            out[key] = g
            return (out,)

        return vjp

    return _unary("index", x, lambda v: v[key], vjp_factory)


def take(x, indices, axis: int = 0):
    """Gather slices along ``axis``; backward scatter-adds repeated indices."""
    indices = np.asarray(indices)

    def vjp_factory(x, _):
        def vjp(g):
            out = np.zeros_like(x.value)
            moved = np.moveaxis(out, axis, 0)
            np.add.at(moved, indices, np.moveaxis(g, axis, 0))
            return (out,)

        return vjp

    return _unary("take", x, lambda v: np.take(v, indices, axis=axis), vjp_factory)


def concat(items: Sequence, axis: int = -1):
    tape = _tape_of(*items)
    values = [_val(i) for i in items]
    if tape is None:
        return np.concatenate(values, axis=axis)
    nodes = [_lift(tape, i) for i in items]
    value = np.concatenate(values, axis=axis)
    splits = np.cumsum([v.shape[axis] for v in values])[:-1]

    def vjp(g):
        return tuple(np.split(g, splits, axis=axis))

    return tape.record("concat", value, nodes, vjp)


def einsum(subscripts: str, *operands):
    """Explicit-output einsum; each operand index must appear elsewhere."""
    tape = _tape_of(*operands)
    values = [_val(op) for op in operands]
    if tape is None:
        return np.einsum(subscripts, *values, optimize=True)

    inputs, output = subscripts.split("->")
    in_subs = inputs.split(",")
    for k, sub_k in enumerate(in_subs):
        others = set(output).union(*(s for j, s in enumerate(in_subs) if j != k))
        if not set(sub_k) <= others or len(set(sub_k)) != len(sub_k):
            raise ContractError(f"einsum operand {k} of {subscripts!r} is not differentiable")

    nodes = [_lift(tape, op) for op in operands]
    value = np.einsum(subscripts, *values, optimize=True)

    def vjp(g):
        grads = []
        for k, node in enumerate(nodes):
            if not node.requires_grad:
                grads.append(None)
                continue
            rest_subs = [s for j, s in enumerate(in_subs) if j != k]
            rest_vals = [v for j, v in enumerate(values) if j != k]
            spec = ",".join([output, *rest_subs]) + "->" + in_subs[k]
            grads.append(np.einsum(spec, g, *rest_vals, optimize=True))
        return tuple(grads)

    return tape.record("einsum", value, nodes, vjp)


def elementwise(x, activation, order: int):
    """Apply the ``order``-th registered derivative of ``activation``.

    Backward needs derivative ``order + 1``; activations that do not register
    it raise a CapabilityError when gradients are being recorded.
    """
    derivatives = activation.derivatives
    if order >= len(derivatives):
        raise CapabilityError(
            f"activation {activation.name!r} has no derivative of order {order}"
        )
    fn = derivatives[order]
    if not isinstance(x, Node):
        return fn(np.asarray(x))
    if x.tape.grad_enabled and x.requires_grad and order + 1 >= len(derivatives):
        raise CapabilityError(
            f"activation {activation.name!r} lacks the derivative of order {order + 1} "
            "needed for parameter gradients"
        )
    value = fn(x.value)
    nxt = derivatives[order + 1] if order + 1 < len(derivatives) else None
    return x.tape.record(
        f"{activation.name}^({order})", value, (x,), lambda g: (g * nxt(x.value),)
    )

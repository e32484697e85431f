from enum import Enum
from typing import Callable, Dict, Sequence, Union

import numpy as np

from ..errors import ContractError, DomainError, ShapeError
from .node import BackwardRule, Node

Index = Union[int, slice, Sequence[int], None]


class OpKind(str, Enum):
    MATMUL = "matmul"
    ADD = "add"
    ELEMENTWISE_MUL = "elementwise_mul"
    TANH = "tanh"
    SIGMOID = "sigmoid"
    ROW_SOFTMAX = "row_softmax"
    LOG = "log"
    SQUARE = "square"
    SUM = "sum"
    CONCAT = "concat"
    SLICE = "slice"
    TRANSPOSE = "transpose"
    SCALAR_MUL = "scalar_mul"


def _result(value: np.ndarray, parents: Sequence[Node], op: str, rule: BackwardRule) -> Node:
    requires_grad = any(p.requires_grad for p in parents)
    return Node(value, parents, op, rule if requires_grad else None, requires_grad)


def _broadcast_rows(op: str, a: Node, b: Node):
    """Check that a and b match, or that one of them is a single row matching the other's width."""
    if a.shape == b.shape:
        return
    if a.value.ndim == 2 and b.value.ndim == 2 and a.shape[1] == b.shape[1]:
        if a.shape[0] == 1 or b.shape[0] == 1:
            return
    raise ShapeError(op, a.shape, b.shape)


def _unbroadcast(grad: np.ndarray, shape) -> np.ndarray:
    if grad.shape == shape:
        return grad
    return grad.sum(axis=0, keepdims=True)


def matmul(a: Node, b: Node) -> Node:
    if a.value.ndim != 2 or b.value.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError("matmul", a.shape, b.shape)

    def rule(grad):
        if a.requires_grad:
            a.grad += grad @ b.value.T
        if b.requires_grad:
            b.grad += a.value.T @ grad

    return _result(a.value @ b.value, (a, b), "matmul", rule)


def add(a: Node, b: Node) -> Node:
    _broadcast_rows("add", a, b)

    def rule(grad):
        if a.requires_grad:
            a.grad += _unbroadcast(grad, a.shape)
        if b.requires_grad:
            b.grad += _unbroadcast(grad, b.shape)

    return _result(a.value + b.value, (a, b), "add", rule)


def elementwise_mul(a: Node, b: Node) -> Node:
    _broadcast_rows("elementwise_mul", a, b)

    def rule(grad):
        if a.requires_grad:
            a.grad += _unbroadcast(grad * b.value, a.shape)
        if b.requires_grad:
            b.grad += _unbroadcast(grad * a.value, b.shape)

    return _result(a.value * b.value, (a, b), "elementwise_mul", rule)


def tanh(a: Node) -> Node:
    out = np.tanh(a.value)

    def rule(grad):
        a.grad += grad * (1.0 - out * out)

    return _result(out, (a,), "tanh", rule)


def sigmoid(a: Node) -> Node:
    # tanh form never overflows
    out = 0.5 * (1.0 + np.tanh(0.5 * a.value))

    def rule(grad):
        a.grad += grad * out * (1.0 - out)

    return _result(out, (a,), "sigmoid", rule)


def row_softmax(a: Node) -> Node:
    if a.value.ndim != 2:
        raise ShapeError("row_softmax", a.shape)
    shifted = a.value - a.value.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    out = exp / exp.sum(axis=1, keepdims=True)

    def rule(grad):
        a.grad += out * (grad - (grad * out).sum(axis=1, keepdims=True))

    return _result(out, (a,), "row_softmax", rule)


def log(a: Node) -> Node:
    if np.any(a.value <= 0.0):
        raise DomainError(f"log: non-positive input (min {a.value.min()!r})")

    def rule(grad):
        a.grad += grad / a.value

    return _result(np.log(a.value), (a,), "log", rule)


def square(a: Node) -> Node:
    def rule(grad):
        a.grad += 2.0 * grad * a.value

    return _result(a.value * a.value, (a,), "square", rule)


def total(a: Node) -> Node:
    """Sum of every entry, as a 1x1 node."""

    def rule(grad):
        a.grad += grad[0, 0]

    return _result(np.array([[a.value.sum()]]), (a,), "sum", rule)


def concat(nodes: Sequence[Node], axis: int = 0) -> Node:
    nodes = tuple(nodes)
    if not nodes:
        raise ContractError("concat needs at least one input")
    other = 1 - axis
    for node in nodes[1:]:
        if node.value.ndim != 2 or node.shape[other] != nodes[0].shape[other]:
            raise ShapeError("concat", nodes[0].shape, node.shape)
    bounds = np.cumsum([0] + [n.shape[axis] for n in nodes])

    def rule(grad):
        for node, start, stop in zip(nodes, bounds[:-1], bounds[1:]):
            if node.requires_grad:
                node.grad += grad[start:stop] if axis == 0 else grad[:, start:stop]

    return _result(np.concatenate([n.value for n in nodes], axis=axis), nodes, "concat", rule)


def _normalize_index(index: Index, extent: int):
    if index is None:
        return slice(None)
    if isinstance(index, slice):
        return index
    positions = np.atleast_1d(np.asarray(index, dtype=np.int64))
    if positions.ndim != 1 or np.any(positions < 0) or np.any(positions >= extent):
        raise ContractError(f"slice: index {index!r} out of range for extent {extent}")
    return positions


def take(a: Node, rows: Index = None, cols: Index = None) -> Node:
    """Select rows and/or columns; int indices keep the rank."""
    if a.value.ndim != 2:
        raise ShapeError("slice", a.shape)
    r = _normalize_index(rows, a.shape[0])
    c = _normalize_index(cols, a.shape[1])
    both_slices = isinstance(r, slice) and isinstance(c, slice)
    if both_slices:
        value = a.value[r, c]
    else:
        r_pos = np.arange(a.shape[0])[r] if isinstance(r, slice) else r
        c_pos = np.arange(a.shape[1])[c] if isinstance(c, slice) else c
        fancy = np.ix_(r_pos, c_pos)
        value = a.value[fancy]

    def rule(grad):
        if both_slices:
            a.grad[r, c] += grad
        else:
            np.add.at(a.grad, fancy, grad)

    return _result(np.array(value), (a,), "slice", rule)


def transpose(a: Node) -> Node:
    def rule(grad):
        a.grad += grad.T

    return _result(np.ascontiguousarray(a.value.T), (a,), "transpose", rule)


def scalar_mul(a: Node, scalar: float) -> Node:
    scalar = float(scalar)

    def rule(grad):
        a.grad += scalar * grad

    return _result(scalar * a.value, (a,), "scalar_mul", rule)


def subtract(a: Node, b: Node) -> Node:
    return add(a, scalar_mul(b, -1.0))


_REGISTRY: Dict[OpKind, Callable[..., Node]] = {
    OpKind.MATMUL: matmul,
    OpKind.ADD: add,
    OpKind.ELEMENTWISE_MUL: elementwise_mul,
    OpKind.TANH: tanh,
    OpKind.SIGMOID: sigmoid,
    OpKind.ROW_SOFTMAX: row_softmax,
    OpKind.LOG: log,
    OpKind.SQUARE: square,
    OpKind.SUM: total,
    OpKind.CONCAT: lambda *nodes, axis=0: concat(nodes, axis=axis),
    OpKind.SLICE: take,
    OpKind.TRANSPOSE: transpose,
    OpKind.SCALAR_MUL: scalar_mul,
}


def forward_op(kind: Union[OpKind, str], *inputs, **kwargs) -> Node:
    """Apply the operation named by kind; see the individual functions for arguments."""
    try:
        fn = _REGISTRY[OpKind(kind)]
    except ValueError:
        raise ContractError(f"unknown operation {kind!r}") from None
    return fn(*inputs, **kwargs)


def lookup(table: Node, ids: Sequence[int]) -> Node:
    """Embedding rows for ids (a gather over the first axis)."""
    return take(table, rows=list(ids))

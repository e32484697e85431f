from typing import Callable, List, Optional, Sequence

import numpy as np

from ..errors import ContractError

BackwardRule = Callable[[np.ndarray], None]


def as_array(data) -> np.ndarray:
    """Copy data into a float64 array of rank 2 (scalars and vectors become rows)."""
    array = np.array(data, dtype=np.float64)
    if array.ndim == 0:
        return array.reshape(1, 1)
    if array.ndim == 1:
        return array.reshape(1, -1)
    if array.ndim > 2:
        raise ContractError(f"arrays are at most rank 2, got shape {array.shape}")
    return array


class Node:
    """A value in a computation graph together with its gradient accumulator."""

    __slots__ = ("value", "parents", "op", "requires_grad", "grad", "_backward")

    def __init__(
        self,
        value: np.ndarray,
        parents: Sequence["Node"] = (),
        op: str = "leaf",
        backward: Optional[BackwardRule] = None,
        requires_grad: bool = False,
    ):
        self.value = value
        self.parents = tuple(parents)
        self.op = op
        self.requires_grad = requires_grad
        self.grad: Optional[np.ndarray] = None
        self._backward = backward

    @property
    def shape(self):
        return self.value.shape

    def item(self) -> float:
        if self.value.size != 1:
            raise ContractError(f"item() needs a single value, got shape {self.value.shape}")
        return float(self.value.reshape(-1)[0])

    def __repr__(self) -> str:
        return f"Node(op={self.op}, shape={self.value.shape}, requires_grad={self.requires_grad})"


def variable(data) -> Node:
    """Create a leaf whose gradient is tracked."""
    return Node(as_array(data), requires_grad=True)


def constant(data) -> Node:
    """Create a leaf that never receives a gradient."""
    return Node(as_array(data))


def topological_order(root: Node) -> List[Node]:
    """Return every node reachable from root, parents before children."""
    order: List[Node] = []
    visited = set()
    stack = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        for parent in node.parents:
            if id(parent) not in visited:
                stack.append((parent, False))
    return order


def backward(root: Node) -> None:
    """Reverse-mode pass: fill .grad of every reachable node with d(root)/d(node)."""
    if root.value.size != 1:
        raise ContractError(f"backward needs a scalar root, got shape {root.value.shape}")

    order = topological_order(root)
    for node in order:
        node.grad = np.zeros_like(node.value) if node.requires_grad else None
    if not root.requires_grad:
        return

    root.grad = np.ones_like(root.value)
    for node in reversed(order):
        if node._backward is not None:
            node._backward(node.grad)

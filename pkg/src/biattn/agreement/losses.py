"""Disagreement between a forward N x M and a backward M x N alignment matrix."""
from enum import Enum
from typing import Optional, Union

import numpy as np

from ..autodiff import Node, add, constant, elementwise_mul, log, scalar_mul, square, subtract, total, transpose
from ..errors import ContractError, DomainError
from ..models import AlignmentMatrix

MatrixLike = Union[Node, AlignmentMatrix, np.ndarray]


class LossKind(str, Enum):
    SOA = "soa"
    SOS = "sos"
    MUL = "mul"

    @classmethod
    def parse(cls, name: Optional[str]) -> Optional["LossKind"]:
        """Map a config string to a kind; 'none' (or None) means no agreement term."""
        if name is None or name.lower() == "none":
            return None
        try:
            return cls(name.lower())
        except ValueError:
            raise ContractError(f"unknown agreement loss {name!r}; expected soa, sos, mul or none") from None


def _as_node(matrix: MatrixLike) -> Node:
    if isinstance(matrix, Node):
        return matrix
    if isinstance(matrix, AlignmentMatrix):
        return constant(matrix.weights)
    return constant(matrix)


def _aligned(a_fwd: MatrixLike, a_bwd: MatrixLike):
    """Forward matrix and the transposed backward matrix, checked for matching shapes."""
    fwd, bwd = _as_node(a_fwd), _as_node(a_bwd)
    if fwd.shape != bwd.shape[::-1]:
        raise ContractError(f"alignment shapes {fwd.shape} and {bwd.shape} are not transposes")
    return fwd, transpose(bwd)


def loss_soa(a_fwd: MatrixLike, a_bwd: MatrixLike) -> Node:
    """-sum (A_fwd[n,m] + A_bwd[m,n])^2."""
    fwd, bwd_t = _aligned(a_fwd, a_bwd)
    return scalar_mul(total(square(add(fwd, bwd_t))), -1.0)


def loss_sos(a_fwd: MatrixLike, a_bwd: MatrixLike) -> Node:
    """sum (A_fwd[n,m] - A_bwd[m,n])^2."""
    fwd, bwd_t = _aligned(a_fwd, a_bwd)
    return total(square(subtract(fwd, bwd_t)))


def loss_mul(a_fwd: MatrixLike, a_bwd: MatrixLike) -> Node:
    """-log sum A_fwd[n,m] * A_bwd[m,n]; the log sits outside the double sum."""
    fwd, bwd_t = _aligned(a_fwd, a_bwd)
    inner = total(elementwise_mul(fwd, bwd_t))
    if inner.item() <= 0.0:
        raise DomainError("multiplicative agreement is undefined: the two matrices share no mass")
    return scalar_mul(log(inner), -1.0)


_LOSSES = {LossKind.SOA: loss_soa, LossKind.SOS: loss_sos, LossKind.MUL: loss_mul}


def disagreement(kind: Union[LossKind, str], a_fwd: MatrixLike, a_bwd: MatrixLike) -> Node:
    kind = LossKind(kind)
    return _LOSSES[kind](a_fwd, a_bwd)

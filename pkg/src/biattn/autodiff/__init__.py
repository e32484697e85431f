from .gradcheck import GradCheckReport, finite_difference_check
from .node import Node, backward, constant, topological_order, variable
from .ops import (
    OpKind,
    add,
    concat,
    elementwise_mul,
    forward_op,
    log,
    lookup,
    matmul,
    row_softmax,
    scalar_mul,
    sigmoid,
    square,
    subtract,
    take,
    tanh,
    total,
    transpose,
)

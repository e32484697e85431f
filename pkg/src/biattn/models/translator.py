"""Attention-based encoder-decoder for one translation direction.

Vectors are 1xD row nodes. The encoder is a bidirectional GRU whose states are
concatenated per source position; the decoder is a GRU fed with the previous
target embedding and the attention context; the readout is a single tanh layer
followed by a softmax over the target vocabulary.
"""
from dataclasses import dataclass
from typing import Dict, List, NamedTuple, Sequence

import numpy as np

from ..autodiff import (
    Node,
    add,
    concat,
    constant,
    elementwise_mul,
    log,
    lookup,
    matmul,
    row_softmax,
    sigmoid,
    subtract,
    take,
    tanh,
    total,
    transpose,
)
from ..corpus import BOS_ID, EOS_ID, SentencePair
from ..errors import ContractError, UnderflowError
from .parameters import GRU_GATES, ParameterBinding


@dataclass(frozen=True)
class EncodedSource:
    states: Node
    keys: Node
    backward_first: Node

    @property
    def length(self) -> int:
        return self.states.shape[0]


@dataclass(frozen=True)
class AlignmentMatrix:
    """Row-stochastic N x M attention weights (target rows, source columns)."""

    weights: np.ndarray

    def __post_init__(self):
        if self.weights.ndim != 2:
            raise ContractError(f"alignment matrix must be 2-d, got shape {self.weights.shape}")
        if not np.allclose(self.weights.sum(axis=1), 1.0, rtol=0.0, atol=1e-9):
            raise ContractError("alignment matrix rows must sum to 1")

    @property
    def shape(self):
        return self.weights.shape


class SentenceScore(NamedTuple):
    log_likelihood: Node
    attention: Node

    @property
    def alignment(self) -> AlignmentMatrix:
        return AlignmentMatrix(self.attention.value)


def _gru(theta: ParameterBinding, prefix: str, inputs: Dict[str, Node], h_prev: Node) -> Node:
    """One GRU update given the already projected inputs x.W_g + b_g."""
    z = sigmoid(add(inputs["z"], matmul(h_prev, theta[f"{prefix}.U_z"])))
    r = sigmoid(add(inputs["r"], matmul(h_prev, theta[f"{prefix}.U_r"])))
    candidate = tanh(add(inputs["h"], matmul(elementwise_mul(r, h_prev), theta[f"{prefix}.U_h"])))
    return add(h_prev, elementwise_mul(z, subtract(candidate, h_prev)))


def _project(theta: ParameterBinding, prefix: str, x: Node) -> Dict[str, Node]:
    return {g: add(matmul(x, theta[f"{prefix}.W_{g}"]), theta[f"{prefix}.b_{g}"]) for g in GRU_GATES}


def _check_ids(ids: Sequence[int], size: int, side: str) -> None:
    if not ids:
        raise ContractError(f"{side} sequence is empty")
    bad = [i for i in ids if not 0 <= i < size]
    if bad:
        raise ContractError(f"{side} ids {bad} outside a vocabulary of size {size}")


def encode(x: Sequence[int], theta: ParameterBinding) -> EncodedSource:
    _check_ids(x, theta.config.source_vocab_size, "source")
    hidden = theta.config.hidden_dim
    embedded = lookup(theta["src_embed"], x)

    states = {}
    for prefix, positions in (("enc_fwd", range(len(x))), ("enc_bwd", range(len(x) - 1, -1, -1))):
        projected = _project(theta, prefix, embedded)
        h = constant(np.zeros((1, hidden)))
        per_position: List[Node] = [None] * len(x)
        for m in positions:
            h = _gru(theta, prefix, {g: take(projected[g], rows=m) for g in GRU_GATES}, h)
            per_position[m] = h
        states[prefix] = per_position

    rows = concat([concat(states["enc_fwd"], axis=0), concat(states["enc_bwd"], axis=0)], axis=1)
    keys = matmul(rows, theta["att.U"])
    return EncodedSource(states=rows, keys=keys, backward_first=states["enc_bwd"][0])


def initial_state(h: EncodedSource, theta: ParameterBinding) -> Node:
    """s_0 = tanh(h_1(backward) . W_init + b_init)."""
    return tanh(add(matmul(h.backward_first, theta["init.W"]), theta["init.b"]))


def attention_row(s_prev: Node, h: EncodedSource, theta: ParameterBinding) -> Node:
    """softmax_m of v . tanh(W s_prev + U h_m), a 1xM row."""
    query = matmul(s_prev, theta["att.W"])
    scores = matmul(tanh(add(h.keys, query)), theta["att.v"])
    return row_softmax(transpose(scores))


def context(row: Node, h: EncodedSource) -> Node:
    if row.shape != (1, h.length):
        raise ContractError(f"attention row of shape {row.shape} does not fit {h.length} source states")
    return matmul(row, h.states)


def decoder_step(s_prev: Node, y_prev: int, c: Node, theta: ParameterBinding) -> Node:
    embedded = lookup(theta["tgt_embed"], [y_prev])
    return _gru(theta, "dec", _project(theta, "dec", concat([embedded, c], axis=1)), s_prev)


def output_distribution(y_prev: int, s: Node, c: Node, theta: ParameterBinding) -> Node:
    """softmax(W_o . tanh(W_s s + W_c c + W_y e(y_prev) + b) + b_o), a 1xV row."""
    embedded = lookup(theta["tgt_embed"], [y_prev])
    readout = add(
        add(add(matmul(s, theta["out.W_s"]), matmul(c, theta["out.W_c"])), matmul(embedded, theta["out.W_y"])),
        theta["out.b"],
    )
    return row_softmax(add(matmul(tanh(readout), theta["out.W_o"]), theta["out.b_o"]))


def sentence_log_likelihood(
    pair: SentencePair, theta: ParameterBinding, teacher_forcing: bool = True
) -> SentenceScore:
    """log P(y|x) with gold history, and the (N+1) x (M+1) attention matrix (EOS on both sides)."""
    if not teacher_forcing:
        raise ContractError("sentence likelihoods are only defined under teacher forcing")
    _check_ids(pair.target, theta.config.target_vocab_size, "target")

    h = encode(list(pair.source) + [EOS_ID], theta)
    s = initial_state(h, theta)
    inputs = [BOS_ID] + list(pair.target)
    outputs = list(pair.target) + [EOS_ID]

    rows, picked = [], []
    for y_prev, y in zip(inputs, outputs):
        row = attention_row(s, h, theta)
        c = context(row, h)
        s = decoder_step(s, y_prev, c, theta)
        probs = output_distribution(y_prev, s, c, theta)
        rows.append(row)
        picked.append(take(probs, cols=y))

    probabilities = concat(picked, axis=1)
    if not (probabilities.value > 0.0).all():
        zeros = np.flatnonzero(probabilities.value[0] <= 0.0).tolist()
        raise UnderflowError(f"gold-token probability underflowed to 0 at target positions {zeros}")
    return SentenceScore(total(log(probabilities)), concat(rows, axis=0))

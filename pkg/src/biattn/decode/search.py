"""Greedy and beam search over the output distribution, and force-decoding."""
from dataclasses import dataclass, field
from typing import List, Sequence, Tuple, Union

import numpy as np

from ..autodiff import Node
from ..corpus import BOS_ID, EOS_ID, PAD_ID, SentencePair
from ..errors import ContractError
from ..models import (
    AlignmentMatrix,
    EncodedSource,
    ModelParameters,
    ParameterBinding,
    attention_row,
    context,
    decoder_step,
    encode,
    initial_state,
    output_distribution,
    sentence_log_likelihood,
)

Theta = Union[ModelParameters, ParameterBinding]

# never emitted: BOS only conditions the first step and PAD never occurs in data
_BLOCKED = (BOS_ID, PAD_ID)


@dataclass
class Hypothesis:
    tokens: List[int]
    log_prob: float
    alignment: List[np.ndarray] = field(default_factory=list)
    finished: bool = False

    def __post_init__(self):
        if len(self.alignment) != len(self.tokens):
            raise ContractError("a hypothesis needs one alignment row per emitted token")

    def alignment_matrix(self) -> np.ndarray:
        return np.vstack(self.alignment) if self.alignment else np.zeros((0, 0))


@dataclass
class _Beam:
    tokens: List[int]
    log_prob: float
    rows: List[np.ndarray]
    state: Node
    last: int

    def as_hypothesis(self, finished: bool = False) -> Hypothesis:
        return Hypothesis(list(self.tokens), self.log_prob, list(self.rows), finished)


def _constant_binding(theta: Theta) -> ParameterBinding:
    return theta.bind(requires_grad=False) if isinstance(theta, ModelParameters) else theta


def _start(x: Sequence[int], theta: ParameterBinding) -> Tuple[EncodedSource, Node]:
    h = encode(list(x) + [EOS_ID], theta)
    return h, initial_state(h, theta)


def _step(theta: ParameterBinding, h: EncodedSource, s: Node, y_prev: int):
    """Attention row, next decoder state and next-token log-probabilities."""
    row = attention_row(s, h, theta)
    c = context(row, h)
    s_next = decoder_step(s, y_prev, c, theta)
    probs = output_distribution(y_prev, s_next, c, theta).value[0]
    with np.errstate(divide="ignore"):
        log_probs = np.log(probs)
    log_probs[list(_BLOCKED)] = -np.inf
    return row.value[0].copy(), s_next, log_probs


def greedy_decode(x: Sequence[int], theta: Theta, max_len: int) -> Hypothesis:
    """Argmax chain (ties to the smallest id) until EOS or max_len tokens."""
    theta = _constant_binding(theta)
    h, s = _start(x, theta)
    beam = _Beam([], 0.0, [], s, BOS_ID)
    for _ in range(max_len):
        row, s, log_probs = _step(theta, h, beam.state, beam.last)
        k = int(np.argmax(log_probs))
        if k == EOS_ID:
            beam.log_prob += float(log_probs[k])
            return beam.as_hypothesis(finished=True)
        beam = _Beam(beam.tokens + [k], beam.log_prob + float(log_probs[k]), beam.rows + [row], s, k)
    return beam.as_hypothesis()


def beam_decode(x: Sequence[int], theta: Theta, beam_width: int, max_len: int) -> Hypothesis:
    """Length-bounded beam search scored by the raw sum of log-probabilities.

    The greedy hypothesis always competes in the final selection, so a wider
    beam never returns a lower score than width 1.
    """
    if beam_width < 1:
        raise ContractError(f"beam width must be at least 1, got {beam_width}")
    theta = _constant_binding(theta)
    greedy = greedy_decode(x, theta, max_len)
    if beam_width == 1:
        return greedy

    h, s = _start(x, theta)
    live = [_Beam([], 0.0, [], s, BOS_ID)]
    finished: List[Hypothesis] = []
    for _ in range(max_len):
        candidates = []
        for beam in live:
            row, s_next, log_probs = _step(theta, h, beam.state, beam.last)
            for k in np.argsort(-log_probs, kind="stable")[:beam_width]:
                candidates.append((beam.log_prob + float(log_probs[k]), beam, int(k), row, s_next))
        candidates.sort(key=lambda c: -c[0])

        live = []
        for score, beam, k, row, s_next in candidates[:beam_width]:
            if score == -np.inf:
                continue
            if k == EOS_ID:
                finished.append(Hypothesis(list(beam.tokens), score, list(beam.rows), True))
            else:
                live.append(_Beam(beam.tokens + [k], score, beam.rows + [row], s_next, k))

        # scores only decrease, so a finished hypothesis at least as good as every live one wins
        if not live or (finished and max(f.log_prob for f in finished) >= max(b.log_prob for b in live)):
            break

    pool = finished + [beam.as_hypothesis() for beam in live] + [greedy]
    return max(pool, key=lambda hyp: hyp.log_prob)


def force_decode(pair: SentencePair, theta: Theta) -> AlignmentMatrix:
    """Attention matrix obtained by decoding the reference target with teacher forcing."""
    return sentence_log_likelihood(pair, _constant_binding(theta)).alignment

"""Joint objective: both directional log-likelihoods minus the weighted disagreement."""
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Union

from ..autodiff import Node, add, constant, scalar_mul
from ..corpus import SentencePair
from ..errors import ContractError
from ..models import ModelParameters, ParameterBinding, sentence_log_likelihood
from .losses import LossKind, disagreement

Theta = Union[ModelParameters, ParameterBinding]


@dataclass
class PairTerms:
    objective: Node
    ll_fwd: float
    ll_bwd: float
    delta: Optional[float]


@dataclass
class JointObjective:
    objective: Node
    ll_fwd: List[float] = field(default_factory=list)
    ll_bwd: List[float] = field(default_factory=list)
    deltas: List[Optional[float]] = field(default_factory=list)

    @property
    def value(self) -> float:
        return self.objective.item()


def _binding(theta: Theta) -> ParameterBinding:
    return theta.bind(requires_grad=True) if isinstance(theta, ModelParameters) else theta


def pair_objective(
    pair: SentencePair,
    theta_fwd: ParameterBinding,
    theta_bwd: ParameterBinding,
    lam: float,
    kind: Optional[LossKind],
) -> PairTerms:
    """log P(y|x) + log P(x|y) - lam * Delta for one pair.

    With lam == 0 the disagreement is still measured, but outside the graph,
    so the gradient is exactly that of the two likelihoods.
    """
    if lam < 0:
        raise ContractError(f"lambda must be non-negative, got {lam}")
    fwd = sentence_log_likelihood(pair, theta_fwd)
    bwd = sentence_log_likelihood(pair.reversed(), theta_bwd)
    objective = add(fwd.log_likelihood, bwd.log_likelihood)

    delta = None
    if kind is not None:
        if lam > 0:
            delta_node = disagreement(kind, fwd.attention, bwd.attention)
            objective = add(objective, scalar_mul(delta_node, -lam))
        else:
            delta_node = disagreement(kind, constant(fwd.attention.value), constant(bwd.attention.value))
        delta = delta_node.item()

    return PairTerms(objective, fwd.log_likelihood.item(), bwd.log_likelihood.item(), delta)


def joint_objective(
    batch: Sequence[SentencePair],
    theta_fwd: Theta,
    theta_bwd: Theta,
    lam: float,
    kind: Optional[Union[LossKind, str]],
) -> JointObjective:
    """J = sum log P(y|x; fwd) + sum log P(x|y; bwd) - lam * sum Delta, differentiable in both."""
    if not batch:
        raise ContractError("joint objective needs at least one sentence pair")
    kind = LossKind.parse(kind) if isinstance(kind, str) or kind is None else kind
    fwd, bwd = _binding(theta_fwd), _binding(theta_bwd)

    result = JointObjective(objective=None)
    for pair in batch:
        terms = pair_objective(pair, fwd, bwd, lam, kind)
        result.objective = terms.objective if result.objective is None else add(result.objective, terms.objective)
        result.ll_fwd.append(terms.ll_fwd)
        result.ll_bwd.append(terms.ll_bwd)
        result.deltas.append(terms.delta)
    return result

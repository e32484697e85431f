"""Adam with global-norm gradient clipping."""
from dataclasses import dataclass, field
from typing import Dict, Mapping, Tuple

import numpy as np

from ..errors import ContractError, TrainingDivergedError
from ..models import ModelParameters
from .config import TrainingConfig

BETA1 = 0.9
BETA2 = 0.999
EPSILON = 1e-8


@dataclass
class AdamState:
    step: int = 0
    m: Dict[str, np.ndarray] = field(default_factory=dict)
    v: Dict[str, np.ndarray] = field(default_factory=dict)

    @classmethod
    def zeros(cls, params: ModelParameters) -> "AdamState":
        return cls(
            step=0,
            m={n: np.zeros_like(a) for n, a in params.tensors.items()},
            v={n: np.zeros_like(a) for n, a in params.tensors.items()},
        )

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, AdamState)
            and self.step == other.step
            and self.m.keys() == other.m.keys()
            and all(np.array_equal(a, other.m[n]) and np.array_equal(self.v[n], other.v[n]) for n, a in self.m.items())
        )


def global_norm(grads: Mapping[str, np.ndarray]) -> float:
    return float(np.sqrt(sum(float(np.sum(g * g)) for g in grads.values())))


def clip_gradients(grads: Mapping[str, np.ndarray], max_norm: float) -> Tuple[Dict[str, np.ndarray], float]:
    """Scale all gradients by max_norm / norm when their global norm exceeds max_norm."""
    norm = global_norm(grads)
    if norm > max_norm:
        scale = max_norm / norm
        return {n: g * scale for n, g in grads.items()}, norm
    return dict(grads), norm


def optimizer_step(
    params: ModelParameters,
    grads: Mapping[str, np.ndarray],
    state: AdamState,
    config: TrainingConfig,
) -> Tuple[ModelParameters, AdamState]:
    """One Adam update (minimizing) after clipping; returns new parameters and state."""
    if set(grads) != set(params.tensors):
        raise ContractError("gradient names do not match the parameters")
    for name, grad in grads.items():
        if grad.shape != params.tensors[name].shape:
            raise ContractError(f"{name}: gradient shape {grad.shape} != parameter shape {params.tensors[name].shape}")
        if not np.all(np.isfinite(grad)):
            raise TrainingDivergedError(
                f"non-finite gradient for {name}",
                {"step": state.step, "quantity": f"grad[{name}]"},
            )

    clipped, _ = clip_gradients(grads, config.clip_norm)
    t = state.step + 1
    lr = config.learning_rate
    new_tensors, new_m, new_v = {}, {}, {}
    for name, value in params.tensors.items():
        g = clipped[name]
        m = BETA1 * state.m[name] + (1.0 - BETA1) * g
        v = BETA2 * state.v[name] + (1.0 - BETA2) * g * g
        m_hat = m / (1.0 - BETA1 ** t)
        v_hat = v / (1.0 - BETA2 ** t)
        new_tensors[name] = value - lr * m_hat / (np.sqrt(v_hat) + EPSILON)
        new_m[name], new_v[name] = m, v

    return params.with_tensors(new_tensors), AdamState(step=t, m=new_m, v=new_v)

"""Central-difference validation of analytic gradients."""
import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from ..errors import ContractError
from .node import Node, as_array, backward, constant, variable

logger = logging.getLogger(__name__)

Params = Union[Mapping[str, np.ndarray], Sequence[np.ndarray]]


@dataclass
class GradCheckReport:
    max_rel_err: float
    passed: bool
    checked: int
    worst: Optional[Tuple[str, Tuple[int, ...]]] = None
    per_param: Dict[str, float] = field(default_factory=dict)


def _leaves(arrays: Dict[str, np.ndarray], factory, as_list: bool):
    leaves = {name: factory(array) for name, array in arrays.items()}
    return list(leaves.values()) if as_list else leaves


def finite_difference_check(
    f: Callable[..., Node],
    params: Params,
    eps: float = 1e-5,
    rel_tol: float = 1e-4,
    abs_floor: float = 1e-8,
    max_coords: Optional[int] = None,
    seed: int = 0,
) -> GradCheckReport:
    """Compare backward() against (f(p+eps) - f(p-eps)) / (2 eps), coordinate by coordinate.

    A coordinate whose absolute difference is within abs_floor counts as exact;
    otherwise its error is |a - n| / max(|a|, |n|). max_coords samples that many
    coordinates per tensor.
    """
    if eps <= 0:
        raise ContractError(f"eps must be positive, got {eps}")

    as_list = not isinstance(params, Mapping)
    items = enumerate(params) if as_list else params.items()
    arrays = {str(name): as_array(value) for name, value in items}

    def evaluate() -> float:
        return f(_leaves(arrays, constant, as_list)).item()

    leaves = _leaves(arrays, variable, as_list)
    root = f(leaves)
    backward(root)
    nodes = leaves if not as_list else dict(zip(arrays, leaves))
    analytic = {
        name: (node.grad.copy() if node.grad is not None else np.zeros_like(node.value))
        for name, node in nodes.items()
    }

    baseline = root.item()
    if evaluate() != baseline:
        raise ContractError("gradient check target is not deterministic")

    rng = np.random.default_rng(seed)
    report = GradCheckReport(max_rel_err=0.0, passed=True, checked=0)
    for name, array in arrays.items():
        coords = list(np.ndindex(array.shape))
        if max_coords is not None and len(coords) > max_coords:
            picked = np.sort(rng.choice(len(coords), size=max_coords, replace=False))
            coords = [coords[i] for i in picked]

        worst_here = 0.0
        for idx in coords:
            original = array[idx]
            array[idx] = original + eps
            plus = evaluate()
            array[idx] = original - eps
            minus = evaluate()
            array[idx] = original

            numeric = (plus - minus) / (2.0 * eps)
            exact = analytic[name][idx]
            diff = abs(exact - numeric)
            err = 0.0 if diff <= abs_floor else diff / max(abs(exact), abs(numeric))
            report.checked += 1
            worst_here = max(worst_here, err)
            if err > report.max_rel_err:
                report.max_rel_err = err
                report.worst = (name, idx)

        report.per_param[name] = worst_here

    report.passed = report.max_rel_err < rel_tol
    if not report.passed:
        logger.debug("gradient check failed at %s (rel err %.3g)", report.worst, report.max_rel_err)
    return report

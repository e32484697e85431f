from collections import OrderedDict
from typing import Dict, Iterator, List, Mapping, Tuple

import numpy as np

from ..autodiff import Node, constant, variable
from ..errors import ContractError
from .config import ModelConfig

GRU_GATES = ("z", "r", "h")


def parameter_shapes(config: ModelConfig) -> "OrderedDict[str, Tuple[int, int]]":
    """Name and shape of every trainable tensor, in a fixed order."""
    E, H = config.embed_dim, config.hidden_dim
    A, L = config.attention_dim, config.readout_dim
    shapes: "OrderedDict[str, Tuple[int, int]]" = OrderedDict()
    shapes["src_embed"] = (config.source_vocab_size, E)
    shapes["tgt_embed"] = (config.target_vocab_size, E)
    for prefix, input_dim in (("enc_fwd", E), ("enc_bwd", E), ("dec", E + 2 * H)):
        for gate in GRU_GATES:
            shapes[f"{prefix}.W_{gate}"] = (input_dim, H)
            shapes[f"{prefix}.U_{gate}"] = (H, H)
            shapes[f"{prefix}.b_{gate}"] = (1, H)
    shapes["init.W"] = (H, H)
    shapes["init.b"] = (1, H)
    shapes["att.W"] = (H, A)
    shapes["att.U"] = (2 * H, A)
    shapes["att.v"] = (A, 1)
    shapes["out.W_s"] = (H, L)
    shapes["out.W_c"] = (2 * H, L)
    shapes["out.W_y"] = (E, L)
    shapes["out.b"] = (1, L)
    shapes["out.W_o"] = (L, config.target_vocab_size)
    shapes["out.b_o"] = (1, config.target_vocab_size)
    return shapes


def is_bias(name: str) -> bool:
    return name.split(".")[-1].startswith("b")


class ParameterBinding(Mapping[str, Node]):
    """Leaf nodes for one computation graph over a parameter set."""

    def __init__(self, nodes: Mapping[str, Node], config: ModelConfig):
        self._nodes = dict(nodes)
        self.config = config

    def __getitem__(self, name: str) -> Node:
        return self._nodes[name]

    def __iter__(self) -> Iterator[str]:
        return iter(self._nodes)

    def __len__(self) -> int:
        return len(self._nodes)

    def gradients(self) -> Dict[str, np.ndarray]:
        """Accumulated gradients after backward(); untouched tensors get zeros."""
        return {
            name: node.grad if node.grad is not None else np.zeros_like(node.value)
            for name, node in self._nodes.items()
        }


class ModelParameters:
    """All trainable tensors of one translation direction."""

    def __init__(self, config: ModelConfig, tensors: Mapping[str, np.ndarray]):
        expected = parameter_shapes(config)
        if list(tensors) != list(expected):
            missing = set(expected) ^ set(tensors)
            raise ContractError(f"parameter names do not match the configuration: {sorted(missing)}")
        for name, shape in expected.items():
            if tuple(tensors[name].shape) != shape:
                raise ContractError(f"{name}: expected shape {shape}, got {tensors[name].shape}")
        self.config = config
        self.tensors: "OrderedDict[str, np.ndarray]" = OrderedDict(
            (name, np.asarray(tensors[name], dtype=np.float64)) for name in expected
        )

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, ModelParameters)
            and self.config == other.config
            and all(np.array_equal(a, other.tensors[n]) for n, a in self.tensors.items())
        )

    def names(self) -> List[str]:
        return list(self.tensors)

    def copy(self) -> "ModelParameters":
        return ModelParameters(self.config, {n: a.copy() for n, a in self.tensors.items()})

    def bind(self, requires_grad: bool = True) -> ParameterBinding:
        factory = variable if requires_grad else constant
        return ParameterBinding({n: factory(a) for n, a in self.tensors.items()}, self.config)

    def with_tensors(self, tensors: Mapping[str, np.ndarray]) -> "ModelParameters":
        return ModelParameters(self.config, tensors)


def init_parameters(config: ModelConfig, seed: int) -> ModelParameters:
    """Glorot-uniform weights in +-sqrt(6 / (fan_in + fan_out)), zero biases."""
    rng = np.random.default_rng(seed)
    tensors = OrderedDict()
    for name, shape in parameter_shapes(config).items():
        if is_bias(name):
            tensors[name] = np.zeros(shape)
        else:
            bound = np.sqrt(6.0 / (shape[0] + shape[1]))
            tensors[name] = rng.uniform(-bound, bound, size=shape)
    return ModelParameters(config, tensors)

from dataclasses import asdict, dataclass
from typing import Optional

from ..errors import ContractError


@dataclass(frozen=True)
class ModelConfig:
    source_vocab_size: int
    target_vocab_size: int
    embed_dim: int
    hidden_dim: int
    attention_dim: Optional[int] = None
    readout_dim: Optional[int] = None

    def __post_init__(self):
        if self.attention_dim is None:
            object.__setattr__(self, "attention_dim", self.hidden_dim)
        if self.readout_dim is None:
            object.__setattr__(self, "readout_dim", self.hidden_dim)
        for name, value in asdict(self).items():
            if value <= 0:
                raise ContractError(f"{name} must be positive, got {value}")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ModelConfig":
        return cls(**data)

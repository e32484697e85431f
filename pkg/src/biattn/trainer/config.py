import os
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Dict, Mapping, Optional, Union

from ..agreement import LossKind
from ..errors import ContractError, UsageError

THREADS_ENV = "BIATTN_THREADS"


def _loss(value: str) -> Optional[LossKind]:
    try:
        return LossKind.parse(value)
    except ContractError as e:
        raise ValueError(str(e)) from None


def _optional_int(value: str) -> Optional[int]:
    return None if value.lower() in ("", "none") else int(value)


# config key -> (attribute, parser)
_KEYS: Dict[str, tuple] = {
    "lambda": ("lam", float),
    "agreement_loss": ("agreement_loss", _loss),
    "embed_dim": ("embed_dim", int),
    "hidden_dim": ("hidden_dim", int),
    "attention_dim": ("attention_dim", _optional_int),
    "batch_size": ("batch_size", int),
    "max_epochs": ("max_epochs", int),
    "learning_rate": ("learning_rate", float),
    "clip_norm": ("clip_norm", float),
    "seed": ("seed", int),
    "validation_interval": ("validation_interval", int),
    "max_len": ("max_len", int),
    "vocab_cap": ("vocab_cap", int),
    "threads": ("threads", int),
}


@dataclass(frozen=True)
class TrainingConfig:
    lam: float = 1.0
    agreement_loss: Optional[LossKind] = LossKind.MUL
    embed_dim: int = 64
    hidden_dim: int = 64
    attention_dim: Optional[int] = None
    batch_size: int = 32
    max_epochs: int = 10
    learning_rate: float = 1e-3
    clip_norm: float = 5.0
    seed: int = 1234
    validation_interval: int = 100
    max_len: int = 50
    vocab_cap: int = 30000
    threads: int = 1

    def __post_init__(self):
        if self.lam < 0:
            raise UsageError(f"lambda must be non-negative, got {self.lam}")
        if self.learning_rate < 0:
            raise UsageError(f"learning_rate must be non-negative, got {self.learning_rate}")
        positive = ("embed_dim", "hidden_dim", "batch_size", "max_epochs", "clip_norm",
                    "validation_interval", "max_len", "threads")
        for name in positive:
            if getattr(self, name) <= 0:
                raise UsageError(f"{name} must be positive, got {getattr(self, name)}")
        if self.attention_dim is not None and self.attention_dim <= 0:
            raise UsageError(f"attention_dim must be positive, got {self.attention_dim}")
        if self.vocab_cap < 4:
            raise UsageError(f"vocab_cap must be at least 4, got {self.vocab_cap}")

    @classmethod
    def from_mapping(cls, values: Mapping[str, str], base: Optional["TrainingConfig"] = None) -> "TrainingConfig":
        """Build from key=value strings; keys not given keep the base (or default) values."""
        changes = {}
        for key, raw in values.items():
            if key not in _KEYS:
                raise UsageError(f"unknown configuration key {key!r}")
            attr, parse = _KEYS[key]
            try:
                changes[attr] = parse(str(raw).strip())
            except ValueError as e:
                raise UsageError(f"bad value for {key}: {raw!r} ({e})") from None
        return replace(base or cls(), **changes)

    def to_mapping(self) -> Dict[str, str]:
        """Every key with its value rendered so that from_mapping restores it exactly."""
        out = {}
        for key, (attr, _) in _KEYS.items():
            value = getattr(self, attr)
            if isinstance(value, LossKind):
                value = value.value
            elif value is None:
                value = "none"
            elif isinstance(value, float):
                value = repr(value)
            out[key] = str(value)
        return out

    def to_text(self) -> str:
        return "".join(f"{key}={value}\n" for key, value in self.to_mapping().items())


def read_config_file(path: Union[str, Path]) -> Dict[str, str]:
    """Flat key=value lines; blank lines and '#' comments are ignored."""
    values = {}
    with open(path, encoding="utf-8") as handle:
        for number, line in enumerate(handle, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{number}: expected key=value, got {line!r}")
            key, value = line.split("=", 1)
            values[key.strip()] = value.strip()
    return values


def resolve_config(
    path: Optional[Union[str, Path]],
    overrides: Mapping[str, str],
    base: Optional[TrainingConfig] = None,
) -> TrainingConfig:
    """Defaults (or base), then the config file, then command-line overrides."""
    config = base or TrainingConfig()
    if path:
        config = TrainingConfig.from_mapping(read_config_file(path), base=config)
    return TrainingConfig.from_mapping(overrides, base=config)


def worker_count(config: TrainingConfig) -> int:
    """Threads for per-pair work: config.threads, capped by BIATTN_THREADS and the CPU count."""
    workers = config.threads
    cap = os.environ.get(THREADS_ENV)
    if cap:
        try:
            workers = min(workers, max(1, int(cap)))
        except ValueError:
            raise UsageError(f"{THREADS_ENV} must be an integer, got {cap!r}") from None
    return max(1, min(workers, os.cpu_count() or 1))


def field_names() -> Dict[str, str]:
    """Config key for every TrainingConfig attribute."""
    by_attr = {attr: key for key, (attr, _) in _KEYS.items()}
    return {f.name: by_attr[f.name] for f in fields(TrainingConfig)}

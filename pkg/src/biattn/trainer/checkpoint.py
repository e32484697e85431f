"""Checkpoint files: a JSON header followed by raw float64 tensors and a SHA-256 trailer.

Layout: MAGIC | version (u32 LE) | header length (u64 LE) | header | payload | digest.
Every tensor is stored little-endian in the payload at the offset the header names,
so a save -> load -> save cycle reproduces the file byte for byte.
"""
import hashlib
import json
import logging
import os
import struct
import tempfile
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import numpy as np

from ..corpus import Vocabulary
from ..errors import CheckpointCorruptError, CheckpointVersionError
from ..models import ModelConfig, ModelParameters
from .config import TrainingConfig
from .history import TrainingHistory
from .optimizer import AdamState

logger = logging.getLogger(__name__)

MAGIC = b"BIATTN\x00\x01"
FORMAT_VERSION = 1
_PREFIX = struct.Struct("<8sIQ")
_DIGEST_SIZE = hashlib.sha256().digest_size

PathLike = Union[str, Path]


@dataclass
class TrainerProgress:
    """Where a run stands: the next (epoch, batch) to process and the running interval sums."""

    epoch: int = 0
    batch: int = 0
    step: int = 0
    skipped: int = 0
    best_score: Optional[List[float]] = None
    interval: Dict[str, float] = field(default_factory=dict)


@dataclass
class DirectionState:
    params: ModelParameters
    source_vocab: Vocabulary
    target_vocab: Vocabulary
    optimizer: Optional[AdamState] = None
    best: Optional[ModelParameters] = None

    @property
    def selected(self) -> ModelParameters:
        """Best-validation parameters when known, else the latest ones."""
        return self.best if self.best is not None else self.params


@dataclass
class Checkpoint:
    models: Dict[str, DirectionState]
    config: TrainingConfig
    history: TrainingHistory = field(default_factory=TrainingHistory)
    progress: TrainerProgress = field(default_factory=TrainerProgress)


class _PayloadWriter:
    def __init__(self):
        self.chunks: List[bytes] = []
        self.offset = 0

    def add(self, array: np.ndarray) -> Tuple[List[int], int]:
        data = np.ascontiguousarray(array, dtype="<f8").tobytes()
        entry = (list(array.shape), self.offset)
        self.chunks.append(data)
        self.offset += len(data)
        return entry


def _tensor_group(writer: _PayloadWriter, tensors: Dict[str, np.ndarray]) -> List[list]:
    return [[name, *writer.add(array)] for name, array in tensors.items()]


def _read_group(payload: bytes, entries: List[list]) -> Dict[str, np.ndarray]:
    tensors = {}
    for name, shape, offset in entries:
        count = int(np.prod(shape))
        end = offset + 8 * count
        if end > len(payload):
            raise CheckpointCorruptError(f"tensor {name} runs past the end of the payload")
        tensors[name] = np.frombuffer(payload[offset:end], dtype="<f8").astype(np.float64).reshape(shape)
    return tensors


def encode_checkpoint(checkpoint: Checkpoint) -> bytes:
    writer = _PayloadWriter()
    models = {}
    for direction, state in checkpoint.models.items():
        entry = {
            "model_config": state.params.config.to_dict(),
            "source_vocab": state.source_vocab.to_tokens(),
            "target_vocab": state.target_vocab.to_tokens(),
            "tensors": _tensor_group(writer, state.params.tensors),
            "best": _tensor_group(writer, state.best.tensors) if state.best is not None else None,
            "optimizer": None,
        }
        if state.optimizer is not None:
            entry["optimizer"] = {
                "step": state.optimizer.step,
                "m": _tensor_group(writer, state.optimizer.m),
                "v": _tensor_group(writer, state.optimizer.v),
            }
        models[direction] = entry

    header = {
        "config": checkpoint.config.to_mapping(),
        "directions": list(checkpoint.models),
        "models": models,
        "history": checkpoint.history.to_dicts(),
        "progress": asdict(checkpoint.progress),
    }
    header_bytes = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    body = _PREFIX.pack(MAGIC, FORMAT_VERSION, len(header_bytes)) + header_bytes + b"".join(writer.chunks)
    return body + hashlib.sha256(body).digest()


def decode_checkpoint(blob: bytes) -> Checkpoint:
    if len(blob) < _PREFIX.size + _DIGEST_SIZE:
        raise CheckpointCorruptError("checkpoint is truncated")
    magic, version, header_len = _PREFIX.unpack_from(blob)
    if magic != MAGIC:
        raise CheckpointCorruptError("not a biattn checkpoint")
    if version != FORMAT_VERSION:
        raise CheckpointVersionError(f"checkpoint format version {version}, this build reads {FORMAT_VERSION}")

    body, digest = blob[:-_DIGEST_SIZE], blob[-_DIGEST_SIZE:]
    if len(body) < _PREFIX.size + header_len or hashlib.sha256(body).digest() != digest:
        raise CheckpointCorruptError("checkpoint is truncated or its digest does not match")
    try:
        header = json.loads(body[_PREFIX.size:_PREFIX.size + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise CheckpointCorruptError(f"unreadable checkpoint header: {e}") from None
    payload = body[_PREFIX.size + header_len:]

    models = {}
    for direction in header["directions"]:
        entry = header["models"][direction]
        config = ModelConfig.from_dict(entry["model_config"])
        optimizer = None
        if entry["optimizer"] is not None:
            opt = entry["optimizer"]
            optimizer = AdamState(opt["step"], _read_group(payload, opt["m"]), _read_group(payload, opt["v"]))
        best = ModelParameters(config, _read_group(payload, entry["best"])) if entry["best"] is not None else None
        models[direction] = DirectionState(
            params=ModelParameters(config, _read_group(payload, entry["tensors"])),
            source_vocab=Vocabulary.from_tokens(entry["source_vocab"]),
            target_vocab=Vocabulary.from_tokens(entry["target_vocab"]),
            optimizer=optimizer,
            best=best,
        )

    return Checkpoint(
        models=models,
        config=TrainingConfig.from_mapping(header["config"]),
        history=TrainingHistory.from_dicts(header["history"]),
        progress=TrainerProgress(**header["progress"]),
    )


def save_checkpoint(checkpoint: Checkpoint, path: PathLike) -> None:
    """Write atomically: a temporary file in the same directory, then os.replace."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    blob = encode_checkpoint(checkpoint)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(blob)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    logger.debug("Saved checkpoint %s (%d bytes)", path, len(blob))


def load_checkpoint(path: PathLike) -> Checkpoint:
    with open(path, "rb") as handle:
        blob = handle.read()
    logger.debug("Loaded checkpoint %s (%d bytes)", path, len(blob))
    return decode_checkpoint(blob)

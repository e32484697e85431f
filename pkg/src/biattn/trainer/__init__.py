from .checkpoint import (
    FORMAT_VERSION,
    MAGIC,
    Checkpoint,
    DirectionState,
    TrainerProgress,
    decode_checkpoint,
    encode_checkpoint,
    load_checkpoint,
    save_checkpoint,
)
from .config import TrainingConfig, field_names, read_config_file, resolve_config, worker_count
from .history import TSV_COLUMNS, IntervalRecord, TrainingHistory
from .optimizer import AdamState, clip_gradients, global_norm, optimizer_step
from .trainer import BACKWARD, FORWARD, checkpoint_paths_for, model_config, train_independent, train_joint

class BiattnError(Exception):
    """Base class for biattn exceptions."""
    pass


class ShapeError(BiattnError):
    """Raised when operand shapes are incompatible with an operation."""

    def __init__(self, op: str, *shapes):
        self.op = op
        self.shapes = shapes
        joined = " and ".join(str(tuple(s)) for s in shapes)
        super().__init__(f"{op}: incompatible shapes {joined}")


class DomainError(BiattnError):
    """Raised when a value falls outside the domain of an operation."""
    pass


class UnderflowError(DomainError):
    """Raised when a gold-token probability underflows to zero."""
    pass


class ContractError(BiattnError):
    """Raised when a caller violates a documented precondition."""
    pass


class CorpusError(BiattnError):
    """Raised when parallel text or alignments cannot be ingested."""
    pass


class CheckpointError(BiattnError):
    """Base class for checkpoint failures."""
    pass


class CheckpointVersionError(CheckpointError):
    """Raised when a checkpoint was written by another format version."""
    pass


class CheckpointCorruptError(CheckpointError):
    """Raised when a checkpoint is truncated or fails its digest."""
    pass


class TrainingError(BiattnError):
    """Base class for training failures."""
    pass


class TrainingDivergedError(TrainingError):
    """Raised when the objective or a gradient stops being finite."""

    def __init__(self, message: str, snapshot: dict):
        self.snapshot = snapshot
        super().__init__(message)


class UsageError(BiattnError):
    """Raised for invalid flag or configuration combinations."""
    pass

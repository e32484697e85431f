from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Iterable, List, Optional, Union

from ..errors import ContractError

TSV_COLUMNS = ("step", "epoch", "objective", "ll_fwd", "ll_bwd", "agreement", "valid_bleu", "valid_objective")


@dataclass
class IntervalRecord:
    step: int
    epoch: int
    objective: float
    ll_fwd: float
    ll_bwd: float
    agreement: float
    valid_bleu: Optional[float] = None
    valid_objective: Optional[float] = None
    # wall-clock seconds since the run started; not persisted
    elapsed: float = field(default=0.0, compare=False)


def _cell(value) -> str:
    if value is None:
        return "-"
    return repr(value) if isinstance(value, float) else str(value)


class TrainingHistory:
    def __init__(self, records: Iterable[IntervalRecord] = ()):
        self.records: List[IntervalRecord] = []
        for record in records:
            self.append(record)

    def __len__(self) -> int:
        return len(self.records)

    def __eq__(self, other) -> bool:
        return isinstance(other, TrainingHistory) and self.records == other.records

    def append(self, record: IntervalRecord) -> None:
        if self.records and record.elapsed < self.records[-1].elapsed:
            raise ContractError("history timestamps must be monotone")
        self.records.append(record)

    @property
    def last(self) -> Optional[IntervalRecord]:
        return self.records[-1] if self.records else None

    def to_dicts(self) -> List[dict]:
        return [{k: v for k, v in asdict(r).items() if k != "elapsed"} for r in self.records]

    @classmethod
    def from_dicts(cls, rows: Iterable[dict]) -> "TrainingHistory":
        known = {f.name for f in fields(IntervalRecord)}
        return cls(IntervalRecord(**{k: v for k, v in row.items() if k in known}) for row in rows)

    def to_tsv(self) -> str:
        lines = ["\t".join(TSV_COLUMNS)]
        for record in self.records:
            lines.append("\t".join(_cell(getattr(record, c)) for c in TSV_COLUMNS))
        return "\n".join(lines) + "\n"

    def write_tsv(self, path: Union[str, Path]) -> None:
        Path(path).write_text(self.to_tsv(), encoding="utf-8")

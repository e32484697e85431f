import logging
from dataclasses import dataclass
from typing import AbstractSet, Iterable, Sequence, Tuple

from ..corpus import GoldAlignment
from ..errors import ContractError

logger = logging.getLogger(__name__)

Links = Iterable[Tuple[int, int]]


@dataclass
class AlignmentCounts:
    """Set sizes that AER, precision and recall are computed from."""

    predicted: int = 0
    sure: int = 0
    hit_sure: int = 0
    hit_possible: int = 0

    def __add__(self, other: "AlignmentCounts") -> "AlignmentCounts":
        return AlignmentCounts(
            self.predicted + other.predicted,
            self.sure + other.sure,
            self.hit_sure + other.hit_sure,
            self.hit_possible + other.hit_possible,
        )

    @property
    def aer(self) -> float:
        denominator = self.predicted + self.sure
        if denominator == 0:
            logger.warning("AER of empty predicted and sure sets is taken as 0")
            return 0.0
        return 1.0 - (self.hit_sure + self.hit_possible) / denominator

    @property
    def precision(self) -> float:
        return self.hit_possible / self.predicted if self.predicted else 0.0

    @property
    def recall(self) -> float:
        return self.hit_sure / self.sure if self.sure else 0.0


def alignment_counts(predicted: Links, sure: Links, possible: Links) -> AlignmentCounts:
    """Possible links always include the sure ones."""
    a, s = frozenset(predicted), frozenset(sure)
    p = frozenset(possible) | s
    return AlignmentCounts(len(a), len(s), len(a & s), len(a & p))


def aer(predicted: Links, sure: Links, possible: Links) -> float:
    """1 - (|A & S| + |A & P|) / (|A| + |S|)."""
    return alignment_counts(predicted, sure, possible).aer


def precision_recall(predicted: Links, sure: Links, possible: Links) -> Tuple[float, float]:
    counts = alignment_counts(predicted, sure, possible)
    return counts.precision, counts.recall


def corpus_counts(predicted: Sequence[AbstractSet], gold: Sequence[GoldAlignment]) -> AlignmentCounts:
    if len(predicted) != len(gold):
        raise ContractError(f"{len(predicted)} predicted link sets but {len(gold)} gold alignments")
    total = AlignmentCounts()
    for links, ref in zip(predicted, gold):
        total = total + alignment_counts(links, ref.sure, ref.all_possible)
    return total


def corpus_aer(predicted: Sequence[AbstractSet], gold: Sequence[GoldAlignment]) -> float:
    """AER over a corpus, pooling the set sizes of every sentence before dividing."""
    return corpus_counts(predicted, gold).aer

"""Attention entropy of target words, per occurrence and averaged per word type (nats)."""
from collections import Counter, defaultdict
from dataclasses import dataclass
from typing import Dict, Hashable, List, Sequence, Tuple, Union

import numpy as np

from ..errors import ContractError
from ..models import AlignmentMatrix

Matrix = Union[AlignmentMatrix, np.ndarray]
# (alignment matrix, target sequence without EOS); row n of the matrix belongs to target position n
AlignedSentence = Tuple[Matrix, Sequence[Hashable]]

BANDS = ("high", "medium", "low")
TABLE_COLUMNS = ("token", "band", "frequency", "independent", "joint")


@dataclass(frozen=True)
class EntropyRecord:
    token: Hashable
    frequency: int
    entropy: float


@dataclass(frozen=True)
class EntropyRow:
    token: Hashable
    band: str
    frequency: int
    independent: float
    joint: float


def _weights(matrix: Matrix) -> np.ndarray:
    return matrix.weights if isinstance(matrix, AlignmentMatrix) else np.asarray(matrix, dtype=np.float64)


def attention_entropy(matrix: Matrix, n: int) -> float:
    """-sum_m A[n, m] log A[n, m], with 0 log 0 = 0."""
    weights = _weights(matrix)
    if not 0 <= n < weights.shape[0]:
        raise ContractError(f"target index {n} outside a matrix with {weights.shape[0]} rows")
    row = weights[n]
    nonzero = row[row > 0]
    return max(0.0, float(-np.sum(nonzero * np.log(nonzero))))


def occurrence_entropies(alignments: Sequence[AlignedSentence]) -> Dict[Hashable, List[float]]:
    """Entropy of every target-token occurrence, grouped by token in corpus order."""
    grouped: Dict[Hashable, List[float]] = defaultdict(list)
    for matrix, targets in alignments:
        if _weights(matrix).shape[0] < len(targets):
            raise ContractError("alignment matrix has fewer rows than target tokens")
        for n, token in enumerate(targets):
            grouped[token].append(attention_entropy(matrix, n))
    return dict(grouped)


def average_attention_entropy(alignments: Sequence[AlignedSentence], y: Hashable) -> EntropyRecord:
    entropies = occurrence_entropies(alignments).get(y)
    if not entropies:
        raise ContractError(f"token {y!r} does not occur in the target sentences")
    return EntropyRecord(y, len(entropies), float(np.mean(entropies)))


def frequency_bands(frequencies: Dict[Hashable, int]) -> Dict[Hashable, str]:
    """Tercile bands of the type frequencies: above the upper tercile is high, above the lower is medium."""
    values = np.array(list(frequencies.values()), dtype=np.float64)
    lower, upper = np.quantile(values, [1.0 / 3.0, 2.0 / 3.0])
    return {
        token: "high" if count > upper else "medium" if count > lower else "low"
        for token, count in frequencies.items()
    }


def entropy_table(
    targets: Sequence[Sequence[Hashable]],
    independent: Sequence[Matrix],
    joint: Sequence[Matrix],
) -> List[EntropyRow]:
    """Per target type: band, frequency and average entropy under two models.

    Both matrix lists force-decode the same target sentences. Rows are sorted
    by decreasing frequency, then token.
    """
    if not (len(targets) == len(independent) == len(joint)):
        raise ContractError("entropy table needs one matrix per sentence for both models")
    if not targets:
        raise ContractError("entropy table needs at least one sentence")
    frequencies = Counter(token for sentence in targets for token in sentence)
    bands = frequency_bands(frequencies)
    indep = occurrence_entropies(list(zip(independent, targets)))
    jnt = occurrence_entropies(list(zip(joint, targets)))
    order = sorted(frequencies, key=lambda token: (-frequencies[token], str(token)))
    return [
        EntropyRow(token, bands[token], frequencies[token], float(np.mean(indep[token])), float(np.mean(jnt[token])))
        for token in order
    ]


def format_entropy_table(rows: Sequence[EntropyRow]) -> str:
    lines = ["\t".join(TABLE_COLUMNS)]
    for row in rows:
        lines.append(f"{row.token}\t{row.band}\t{row.frequency}\t{row.independent!r}\t{row.joint!r}")
    return "\n".join(lines) + "\n"

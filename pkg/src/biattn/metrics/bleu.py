"""Corpus-level BLEU without smoothing."""
from collections import Counter
from dataclasses import dataclass
from typing import List, Sequence

import numpy as np

from ..errors import ContractError

Tokens = Sequence[str]


def _ngrams(tokens: Tokens, n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def _closest_length(hyp_len: int, references: Sequence[Tokens]) -> int:
    return min((abs(len(ref) - hyp_len), len(ref)) for ref in references)[1]


def sentence_statistics(
    candidate: Tokens,
    references: Sequence[Tokens],
    max_n: int = 4,
    case_insensitive: bool = True,
) -> np.ndarray:
    """[matches_1..max_n, totals_1..max_n, hypothesis length, reference length] for one sentence."""
    if not references:
        raise ContractError("every candidate needs at least one reference")
    if case_insensitive:
        candidate = [t.lower() for t in candidate]
        references = [[t.lower() for t in ref] for ref in references]

    stats = np.zeros(2 * max_n + 2, dtype=np.int64)
    for n in range(1, max_n + 1):
        counts = _ngrams(candidate, n)
        max_ref: Counter = Counter()
        for ref in references:
            max_ref |= _ngrams(ref, n)
        stats[n - 1] = sum(min(c, max_ref[g]) for g, c in counts.items())
        stats[max_n + n - 1] = max(len(candidate) - n + 1, 0)
    stats[-2] = len(candidate)
    stats[-1] = _closest_length(len(candidate), references)
    return stats


def score_from_statistics(stats: np.ndarray, max_n: int = 4) -> float:
    matches, totals = stats[:max_n], stats[max_n:2 * max_n]
    hyp_len, ref_len = int(stats[-2]), int(stats[-1])
    if hyp_len == 0 or np.any(totals == 0) or np.any(matches == 0):
        return 0.0
    log_precision = float(np.mean(np.log(matches / totals)))
    brevity = 1.0 if hyp_len > ref_len else float(np.exp(1.0 - ref_len / hyp_len))
    return 100.0 * brevity * float(np.exp(log_precision))


@dataclass
class BleuStatistics:
    matches: List[int]
    totals: List[int]
    hyp_len: int
    ref_len: int

    @property
    def score(self) -> float:
        return score_from_statistics(self.as_array(), len(self.matches))

    def as_array(self) -> np.ndarray:
        return np.array(self.matches + self.totals + [self.hyp_len, self.ref_len], dtype=np.int64)

    @classmethod
    def from_array(cls, stats: np.ndarray, max_n: int = 4) -> "BleuStatistics":
        values = [int(v) for v in stats]
        return cls(values[:max_n], values[max_n:2 * max_n], values[-2], values[-1])


def corpus_statistics(
    candidates: Sequence[Tokens],
    reference_sets: Sequence[Sequence[Tokens]],
    max_n: int = 4,
    case_insensitive: bool = True,
) -> np.ndarray:
    """Per-sentence statistics, one row per candidate."""
    if not candidates:
        raise ContractError("BLEU needs at least one candidate")
    if len(candidates) != len(reference_sets):
        raise ContractError(f"{len(candidates)} candidates but {len(reference_sets)} reference sets")
    return np.vstack([
        sentence_statistics(cand, refs, max_n, case_insensitive)
        for cand, refs in zip(candidates, reference_sets)
    ])


def bleu_statistics(
    candidates: Sequence[Tokens],
    reference_sets: Sequence[Sequence[Tokens]],
    max_n: int = 4,
    case_insensitive: bool = True,
) -> BleuStatistics:
    rows = corpus_statistics(candidates, reference_sets, max_n, case_insensitive)
    return BleuStatistics.from_array(rows.sum(axis=0), max_n)


def bleu(
    candidates: Sequence[Tokens],
    reference_sets: Sequence[Sequence[Tokens]],
    max_n: int = 4,
    case_insensitive: bool = True,
) -> float:
    """Corpus BLEU in [0, 100]: clipped n-gram precisions times the brevity penalty.

    The reference length of a sentence is the one closest to the candidate,
    ties going to the shorter reference.
    """
    return bleu_statistics(candidates, reference_sets, max_n, case_insensitive).score

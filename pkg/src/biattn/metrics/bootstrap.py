from typing import Sequence

import numpy as np

from ..errors import ContractError
from .bleu import Tokens, corpus_statistics, score_from_statistics


def paired_bootstrap(
    cand_a: Sequence[Tokens],
    cand_b: Sequence[Tokens],
    references: Sequence[Sequence[Tokens]],
    resamples: int = 1000,
    seed: int = 0,
    max_n: int = 4,
) -> float:
    """p-value for "A is better than B": the share of resampled test sets where BLEU(B) >= BLEU(A).

    Both systems are scored on the same resampled sentence indices.
    """
    if len(cand_a) != len(cand_b):
        raise ContractError(f"systems translated {len(cand_a)} and {len(cand_b)} sentences")
    if resamples < 1:
        raise ContractError(f"resamples must be positive, got {resamples}")
    stats_a = corpus_statistics(cand_a, references, max_n)
    stats_b = corpus_statistics(cand_b, references, max_n)

    rng = np.random.default_rng(seed)
    size = len(cand_a)
    not_worse = 0
    for _ in range(resamples):
        idx = rng.integers(0, size, size)
        score_a = score_from_statistics(stats_a[idx].sum(axis=0), max_n)
        score_b = score_from_statistics(stats_b[idx].sum(axis=0), max_n)
        not_worse += score_b >= score_a
    return not_worse / resamples

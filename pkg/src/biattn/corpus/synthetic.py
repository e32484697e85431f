"""Toy language pairs with known word alignments."""
from enum import Enum
from typing import List, Tuple, Union

import numpy as np

from ..errors import ContractError
from .parallel import ParallelCorpus, SentencePair
from .pharaoh import GoldAlignment
from .vocab import SPECIALS, Vocabulary


class SyntheticTask(str, Enum):
    COPY = "copy"
    REVERSE = "reverse"
    LEXICON_SWAP_WITH_LOCAL_REORDER = "lexicon_swap_with_local_reorder"

    @classmethod
    def parse(cls, name: str) -> "SyntheticTask":
        aliases = {"lexicon": cls.LEXICON_SWAP_WITH_LOCAL_REORDER}
        name = name.lower().replace("-", "_")
        if name.endswith("_task"):
            name = name[: -len("_task")]
        if name in aliases:
            return aliases[name]
        try:
            return cls(name)
        except ValueError:
            raise ContractError(f"unknown synthetic task {name!r}") from None


def _swap_permutation(source: np.ndarray) -> List[int]:
    """Source position feeding each target position.

    Even word types act as modifiers and odd ones as heads: every adjacent
    (modifier, head) pair is emitted head first, scanning left to right
    without overlap.
    """
    order, i = [], 0
    while i < len(source):
        if i + 1 < len(source) and source[i] % 2 == 0 and source[i + 1] % 2 == 1:
            order.extend([i + 1, i])
            i += 2
        else:
            order.append(i)
            i += 1
    return order


def generate_synthetic(
    task: Union[SyntheticTask, str],
    vocab_size: int,
    num_pairs: int,
    len_range: Tuple[int, int],
    seed: int,
) -> ParallelCorpus:
    """Deterministic toy corpus; every pair carries the sure links implied by the task."""
    task = SyntheticTask.parse(task) if isinstance(task, str) else task
    low, high = len_range
    if vocab_size < 8:
        raise ContractError(f"synthetic tasks need at least 8 word types, got {vocab_size}")
    if not 1 <= low <= high:
        raise ContractError(f"invalid length range {len_range}")

    rng = np.random.default_rng(seed)
    if task == SyntheticTask.LEXICON_SWAP_WITH_LOCAL_REORDER:
        lexicon = rng.permutation(vocab_size)
        source_names = [f"s{k}" for k in range(vocab_size)]
        target_names = [f"t{k}" for k in range(vocab_size)]
    else:
        lexicon = np.arange(vocab_size)
        source_names = target_names = [f"w{k}" for k in range(vocab_size)]

    offset = len(SPECIALS)
    pairs = []
    for _ in range(num_pairs):
        length = int(rng.integers(low, high + 1))
        source = rng.integers(0, vocab_size, size=length)
        if task == SyntheticTask.COPY:
            order = list(range(length))
        elif task == SyntheticTask.REVERSE:
            order = list(range(length - 1, -1, -1))
        else:
            order = _swap_permutation(source)
        target = [int(lexicon[source[m]]) for m in order]
        gold = GoldAlignment(sure=frozenset((m, n) for n, m in enumerate(order)))
        pairs.append(
            SentencePair(
                tuple(int(k) + offset for k in source),
                tuple(k + offset for k in target),
                gold,
            )
        )

    return ParallelCorpus(
        tuple(pairs),
        Vocabulary(list(SPECIALS) + source_names),
        Vocabulary(list(SPECIALS) + target_names),
    )

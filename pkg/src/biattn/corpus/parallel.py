import logging
from dataclasses import dataclass, replace
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from ..errors import ContractError, CorpusError
from .pharaoh import GoldAlignment, read_pharaoh
from .vocab import Vocabulary

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


@dataclass(frozen=True)
class SentencePair:
    source: Tuple[int, ...]
    target: Tuple[int, ...]
    gold: Optional[GoldAlignment] = None

    def __post_init__(self):
        if not self.source or not self.target:
            raise ContractError("sentence pairs need at least one token on each side")
        if self.gold is not None and not self.gold.within(len(self.source), len(self.target)):
            raise ContractError(f"gold links out of bounds for a {len(self.source)}x{len(self.target)} pair")

    def reversed(self) -> "SentencePair":
        gold = self.gold.transposed() if self.gold is not None else None
        return SentencePair(self.target, self.source, gold)


@dataclass(frozen=True)
class ParallelCorpus:
    pairs: Tuple[SentencePair, ...]
    source_vocab: Vocabulary
    target_vocab: Vocabulary
    dropped: int = 0

    def __post_init__(self):
        for pair in self.pairs:
            if max(pair.source) >= len(self.source_vocab) or max(pair.target) >= len(self.target_vocab):
                raise ContractError("sentence pair holds ids outside its vocabulary")

    def __len__(self) -> int:
        return len(self.pairs)

    def __iter__(self):
        return iter(self.pairs)

    def subset(self, indices: Sequence[int]) -> "ParallelCorpus":
        return replace(self, pairs=tuple(self.pairs[i] for i in indices), dropped=0)

    def source_tokens(self, index: int) -> List[str]:
        return self.source_vocab.decode(self.pairs[index].source)

    def target_tokens(self, index: int) -> List[str]:
        return self.target_vocab.decode(self.pairs[index].target)


def _read_lines(path: PathLike) -> List[str]:
    with open(path, encoding="utf-8") as handle:
        return [line.rstrip("\n") for line in handle]


def load_parallel(
    source_path: PathLike,
    target_path: PathLike,
    source_vocab: Vocabulary,
    target_vocab: Vocabulary,
    max_len: int,
    gold_path: Optional[PathLike] = None,
) -> ParallelCorpus:
    """Read line-aligned, whitespace-tokenized files; over-long or empty pairs are dropped and counted."""
    sources = _read_lines(source_path)
    targets = _read_lines(target_path)
    if len(sources) != len(targets):
        raise CorpusError(
            f"line counts differ: {source_path} has {len(sources)}, {target_path} has {len(targets)}"
        )
    golds: List[Optional[GoldAlignment]] = [None] * len(sources)
    if gold_path is not None:
        golds = read_pharaoh(gold_path)
        if len(golds) != len(sources):
            raise CorpusError(f"line counts differ: {gold_path} has {len(golds)}, parallel text has {len(sources)}")

    pairs, dropped = [], 0
    for src_line, tgt_line, gold in zip(sources, targets, golds):
        src, tgt = src_line.split(), tgt_line.split()
        if not src or not tgt or len(src) > max_len or len(tgt) > max_len:
            dropped += 1
            continue
        pairs.append(SentencePair(tuple(source_vocab.encode(src)), tuple(target_vocab.encode(tgt)), gold))

    logger.info("Loaded %d pairs from %s / %s (%d dropped)", len(pairs), source_path, target_path, dropped)
    return ParallelCorpus(tuple(pairs), source_vocab, target_vocab, dropped)


def reverse_corpus(corpus: ParallelCorpus) -> ParallelCorpus:
    """Swap sides, vocabularies and gold links (m, n) -> (n, m)."""
    return ParallelCorpus(
        tuple(pair.reversed() for pair in corpus.pairs),
        corpus.target_vocab,
        corpus.source_vocab,
        corpus.dropped,
    )


def write_parallel(corpus: ParallelCorpus, prefix: PathLike) -> List[Path]:
    """Write prefix.src, prefix.tgt and, when every pair has gold links, prefix.gold."""
    prefix = Path(prefix)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    paths = [prefix.with_name(prefix.name + ".src"), prefix.with_name(prefix.name + ".tgt")]
    with open(paths[0], "w", encoding="utf-8") as src, open(paths[1], "w", encoding="utf-8") as tgt:
        for i in range(len(corpus)):
            src.write(" ".join(corpus.source_tokens(i)) + "\n")
            tgt.write(" ".join(corpus.target_tokens(i)) + "\n")

    if corpus.pairs and all(pair.gold is not None for pair in corpus.pairs):
        gold_path = prefix.with_name(prefix.name + ".gold")
        with open(gold_path, "w", encoding="utf-8") as gold:
            for pair in corpus.pairs:
                gold.write(str(pair.gold) + "\n")
        paths.append(gold_path)
    return paths


def split_corpus(corpus: ParallelCorpus, held_out: int, seed: int) -> Tuple[ParallelCorpus, ParallelCorpus]:
    """Seeded split into (train, held-out) with held_out pairs in the second part."""
    if not 0 <= held_out <= len(corpus):
        raise ContractError(f"cannot hold out {held_out} of {len(corpus)} pairs")
    order = np.random.default_rng(seed).permutation(len(corpus))
    held = sorted(order[:held_out].tolist())
    train = sorted(order[held_out:].tolist())
    return corpus.subset(train), corpus.subset(held)

from collections import Counter
from typing import Dict, Iterable, List, Sequence

from ..errors import ContractError, CorpusError

UNK, BOS, EOS, PAD = "<unk>", "<s>", "</s>", "<pad>"
SPECIALS = (UNK, BOS, EOS, PAD)
UNK_ID, BOS_ID, EOS_ID, PAD_ID = range(4)


class Vocabulary:
    """Bijection between surface tokens and ids; ids 0..3 are the reserved specials."""

    def __init__(self, tokens: Sequence[str]):
        tokens = list(tokens)
        if tuple(tokens[: len(SPECIALS)]) != SPECIALS:
            raise ContractError("vocabulary must start with the reserved specials")
        self._tokens: List[str] = tokens
        self._index: Dict[str, int] = {}
        for i, token in enumerate(tokens):
            if token in self._index:
                raise ContractError(f"duplicate vocabulary entry {token!r}")
            self._index[token] = i

    def __len__(self) -> int:
        return len(self._tokens)

    def __contains__(self, token: str) -> bool:
        return token in self._index

    def __eq__(self, other) -> bool:
        return isinstance(other, Vocabulary) and self._tokens == other._tokens

    def __repr__(self) -> str:
        return f"Vocabulary(size={len(self)})"

    def id(self, token: str) -> int:
        return self._index.get(token, UNK_ID)

    def token(self, index: int) -> str:
        return self._tokens[index]

    def encode(self, tokens: Iterable[str]) -> List[int]:
        return [self._index.get(t, UNK_ID) for t in tokens]

    def decode(self, ids: Iterable[int]) -> List[str]:
        return [self._tokens[i] for i in ids]

    def to_tokens(self) -> List[str]:
        return list(self._tokens)

    @classmethod
    def from_tokens(cls, tokens: Sequence[str]) -> "Vocabulary":
        return cls(tokens)


def build_vocab(token_stream: Iterable[str], cap: int) -> Vocabulary:
    """Keep the (cap - 4) most frequent tokens; ties go to the earlier first occurrence."""
    if cap < len(SPECIALS):
        raise ContractError(f"vocabulary cap must be at least {len(SPECIALS)}, got {cap}")

    counts: Counter = Counter()
    seen_any = False
    for token in token_stream:
        seen_any = True
        if token not in SPECIALS:
            counts[token] += 1
    if not seen_any:
        raise CorpusError("cannot build a vocabulary from an empty token stream")

    # Counter keeps insertion order and most_common sorts stably
    kept = [token for token, _ in counts.most_common(cap - len(SPECIALS))]
    return Vocabulary(list(SPECIALS) + kept)

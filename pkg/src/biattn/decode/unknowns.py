from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Union

import numpy as np

from ..corpus import UNK_ID, Vocabulary
from ..errors import ContractError, CorpusError
from .search import Hypothesis


def load_lexicon(path: Union[str, Path]) -> Dict[str, str]:
    """source_token<TAB>target_token per line; the first entry for a source token wins."""
    lexicon: Dict[str, str] = {}
    with open(path, encoding="utf-8") as handle:
        for number, line in enumerate(handle, 1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) != 2 or not parts[0] or not parts[1]:
                raise CorpusError(f"{path}:{number}: expected source<TAB>target, got {line!r}")
            lexicon.setdefault(parts[0], parts[1])
    return lexicon


def replace_unknowns(
    hyp: Hypothesis,
    source_tokens: Sequence[str],
    target_vocab: Vocabulary,
    lexicon: Optional[Mapping[str, str]] = None,
) -> List[str]:
    """Surface tokens where each UNK becomes the translation (or a copy) of its most attended source word.

    With an empty source there is nothing to copy and UNK is kept.
    """
    if len(hyp.alignment) != len(hyp.tokens):
        raise ContractError("replacing unknown words needs the hypothesis alignment rows")
    out = []
    for token, row in zip(hyp.tokens, hyp.alignment):
        if token != UNK_ID or not source_tokens:
            out.append(target_vocab.token(token))
            continue
        word = source_tokens[int(np.argmax(row[: len(source_tokens)]))]
        out.append(lexicon.get(word, word) if lexicon else word)
    return out

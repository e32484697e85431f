"""Model-level evaluation shared by the translate, align, eval, analyze and sweep commands."""
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Callable, Iterable, List, Mapping, Optional, Sequence, Tuple, TypeVar

import numpy as np

from ..agreement import LossKind, disagreement
from ..corpus import ParallelCorpus, SentencePair
from ..decode import Hypothesis, LinkSet, beam_decode, extract_one_to_one, force_decode, replace_unknowns
from ..errors import UsageError
from ..metrics import bleu, corpus_aer, occurrence_entropies
from ..models import AlignmentMatrix, ModelParameters
from ..trainer import BACKWARD, FORWARD, DirectionState, load_checkpoint

T = TypeVar("T")
R = TypeVar("R")


def parallel_map(fn: Callable[[T], R], items: Iterable[T], workers: int = 1) -> List[R]:
    """Map in worker threads; results keep the input order."""
    items = list(items)
    if workers <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def read_token_lines(path) -> List[List[str]]:
    with open(path, encoding="utf-8") as handle:
        return [line.split() for line in handle]


def load_direction(path, direction: Optional[str] = None) -> Tuple[str, DirectionState]:
    """One direction from a run directory (fwd.ckpt / bwd.ckpt) or a checkpoint file."""
    path = Path(path)
    if path.is_dir():
        path = path / f"{direction or FORWARD}.ckpt"
    if not path.is_file():
        raise UsageError(f"checkpoint {path} does not exist")
    checkpoint = load_checkpoint(path)
    if direction is None:
        direction = next(iter(checkpoint.models))
    if direction not in checkpoint.models:
        raise UsageError(f"{path} holds no {direction} model")
    return direction, checkpoint.models[direction]


def model_orientation(direction: str, sources: Sequence, targets: Sequence) -> Tuple[Sequence, Sequence]:
    """(model input side, model output side) of source-file and target-file data."""
    return (targets, sources) if direction == BACKWARD else (sources, targets)


def translate_sentences(
    sentences: Sequence[Sequence[str]],
    state: DirectionState,
    beam: int,
    max_len: int,
    replace_unk: bool = False,
    lexicon: Optional[Mapping[str, str]] = None,
    workers: int = 1,
) -> List[Tuple[List[str], Hypothesis]]:
    """Surface translation and hypothesis of every sentence."""

    def translate(tokens: Sequence[str]) -> Tuple[List[str], Hypothesis]:
        hyp = beam_decode(state.source_vocab.encode(tokens), state.selected, beam, max_len)
        if replace_unk:
            return replace_unknowns(hyp, list(tokens), state.target_vocab, lexicon), hyp
        return state.target_vocab.decode(hyp.tokens), hyp

    return parallel_map(translate, sentences, workers)


def hypothesis_links(hyp: Hypothesis, source_length: int) -> LinkSet:
    """One-to-one links of a decoded hypothesis over the real source positions."""
    if not hyp.tokens or source_length == 0:
        return LinkSet()
    return extract_one_to_one(hyp.alignment_matrix()[:, :source_length])


def force_decode_all(pairs: Sequence[SentencePair], params: ModelParameters, workers: int = 1) -> List[AlignmentMatrix]:
    return parallel_map(lambda pair: force_decode(pair, params), pairs, workers)


def model_pairs(corpus: ParallelCorpus, direction: str) -> List[SentencePair]:
    return [pair.reversed() for pair in corpus.pairs] if direction == BACKWARD else list(corpus.pairs)


def predicted_links(
    corpus: ParallelCorpus, params: ModelParameters, direction: str, workers: int = 1
) -> List[LinkSet]:
    """Force-decoded one-to-one links, always as (source-file index, target-file index)."""
    matrices = force_decode_all(model_pairs(corpus, direction), params, workers)
    links = [extract_one_to_one(matrix, exclude_eos=True) for matrix in matrices]
    return [link.transposed() for link in links] if direction == BACKWARD else links


def alignment_error(corpus: ParallelCorpus, params: ModelParameters, direction: str, workers: int = 1) -> float:
    golds = [pair.gold for pair in corpus.pairs]
    if any(gold is None for gold in golds):
        raise UsageError("alignment error rate needs gold links for every pair")
    return corpus_aer([link.links for link in predicted_links(corpus, params, direction, workers)], golds)


def held_out_bleu(
    corpus: ParallelCorpus, params: ModelParameters, direction: str, beam: int, max_len: int, workers: int = 1
) -> float:
    pairs = model_pairs(corpus, direction)
    state_vocab = corpus.source_vocab if direction == BACKWARD else corpus.target_vocab
    hyps = parallel_map(lambda pair: beam_decode(pair.source, params, beam, max_len), pairs, workers)
    candidates = [state_vocab.decode(hyp.tokens) for hyp in hyps]
    references = [[state_vocab.decode(pair.target)] for pair in pairs]
    return bleu(candidates, references)


def mean_disagreement(
    corpus: ParallelCorpus,
    fwd: ModelParameters,
    bwd: ModelParameters,
    kind: LossKind = LossKind.MUL,
    workers: int = 1,
) -> float:
    """Average disagreement of the force-decoded forward and backward matrices."""
    fwd_matrices = force_decode_all(model_pairs(corpus, FORWARD), fwd, workers)
    bwd_matrices = force_decode_all(model_pairs(corpus, BACKWARD), bwd, workers)
    values = [disagreement(kind, a, b).item() for a, b in zip(fwd_matrices, bwd_matrices)]
    return float(np.mean(values))


def mean_entropy(corpus: ParallelCorpus, params: ModelParameters, direction: str, workers: int = 1) -> float:
    """Mean attention entropy over every target-token occurrence (EOS rows excluded)."""
    pairs = model_pairs(corpus, direction)
    matrices = force_decode_all(pairs, params, workers)
    grouped = occurrence_entropies([(matrix, pair.target) for matrix, pair in zip(matrices, pairs)])
    return float(np.mean([h for values in grouped.values() for h in values]))

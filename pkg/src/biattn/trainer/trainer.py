"""Mini-batch training of one direction alone or of both directions jointly."""
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from tqdm import tqdm

from ..agreement import pair_objective
from ..autodiff import backward, scalar_mul
from ..corpus import ParallelCorpus, SentencePair, reverse_corpus
from ..decode import greedy_decode
from ..errors import ContractError, DomainError, TrainingDivergedError, TrainingError, UnderflowError
from ..metrics import bleu
from ..models import ModelConfig, ModelParameters, init_parameters, sentence_log_likelihood
from .checkpoint import Checkpoint, DirectionState, PathLike, TrainerProgress, save_checkpoint
from .config import TrainingConfig, worker_count
from .history import IntervalRecord, TrainingHistory
from .optimizer import AdamState, optimizer_step

logger = logging.getLogger(__name__)

FORWARD = "fwd"
BACKWARD = "bwd"
MAX_SKIPPED_FRACTION = 0.01


@dataclass
class _PairOutcome:
    grads: Dict[str, Dict[str, np.ndarray]] = field(default_factory=dict)
    ll_fwd: float = 0.0
    ll_bwd: float = 0.0
    delta: float = 0.0
    skipped: bool = False

    @property
    def finite(self) -> bool:
        return bool(np.isfinite([self.ll_fwd, self.ll_bwd, self.delta]).all())


def model_config(source_vocab_size: int, target_vocab_size: int, config: TrainingConfig) -> ModelConfig:
    return ModelConfig(
        source_vocab_size=source_vocab_size,
        target_vocab_size=target_vocab_size,
        embed_dim=config.embed_dim,
        hidden_dim=config.hidden_dim,
        attention_dim=config.attention_dim,
    )


def _fresh_state(params: ModelParameters, corpus: ParallelCorpus) -> DirectionState:
    return DirectionState(params, corpus.source_vocab, corpus.target_vocab, AdamState.zeros(params))


def _check_vocabularies(state: DirectionState, corpus: ParallelCorpus, direction: str) -> None:
    if state.source_vocab != corpus.source_vocab or state.target_vocab != corpus.target_vocab:
        raise ContractError(f"{direction} model vocabularies do not match the training corpus")


def _sum_gradients(grads: Sequence[Mapping[str, np.ndarray]]) -> Dict[str, np.ndarray]:
    """Sum in the given order so the result does not depend on thread scheduling."""
    total = {name: g.copy() for name, g in grads[0].items()}
    for item in grads[1:]:
        for name, g in item.items():
            total[name] += g
    return total


class _TrainingRun:
    """Epoch and batch loop shared by independent and joint training.

    states holds one direction (independent) or fwd and bwd (joint); the joint
    run feeds the forward-oriented corpus and reverses each pair for bwd.
    """

    def __init__(
        self,
        corpus: ParallelCorpus,
        config: TrainingConfig,
        states: Dict[str, DirectionState],
        validation: Optional[ParallelCorpus],
        history: TrainingHistory,
        progress: TrainerProgress,
        checkpoint_paths: Optional[Mapping[str, PathLike]],
        show_progress: bool,
    ):
        self.corpus = corpus
        self.config = config
        self.states = states
        self.joint = len(states) == 2
        self.validation = validation
        self.history = history
        self.progress = progress
        self.checkpoint_paths = dict(checkpoint_paths or {})
        self.show_progress = show_progress
        self.started = time.perf_counter()

    # per-pair work, run on worker threads

    def _pair_outcome(self, pair: SentencePair) -> _PairOutcome:
        try:
            return self._pair_gradients(pair)
        except UnderflowError as e:
            raise TrainingDivergedError(
                f"log-likelihood undefined at step {self.progress.step}: {e}",
                {"step": self.progress.step, "quantity": "log_likelihood"},
            ) from e

    def _pair_gradients(self, pair: SentencePair) -> _PairOutcome:
        if self.joint:
            fwd = self.states[FORWARD].params.bind(requires_grad=True)
            bwd = self.states[BACKWARD].params.bind(requires_grad=True)
            try:
                terms = pair_objective(pair, fwd, bwd, self.config.lam, self.config.agreement_loss)
            except UnderflowError:
                raise
            except DomainError as e:
                logger.debug("Skipping pair: %s", e)
                return _PairOutcome(skipped=True)
            backward(scalar_mul(terms.objective, -1.0))
            return _PairOutcome(
                grads={FORWARD: fwd.gradients(), BACKWARD: bwd.gradients()},
                ll_fwd=terms.ll_fwd,
                ll_bwd=terms.ll_bwd,
                delta=terms.delta or 0.0,
            )

        (direction, state), = self.states.items()
        binding = state.params.bind(requires_grad=True)
        score = sentence_log_likelihood(pair, binding)
        backward(scalar_mul(score.log_likelihood, -1.0))
        return _PairOutcome(grads={direction: binding.gradients()}, ll_fwd=score.log_likelihood.item())

    def _pair_value(self, pair: SentencePair) -> Optional[float]:
        """Objective of one pair under the current parameters, without gradients."""
        if self.joint:
            fwd = self.states[FORWARD].params.bind(requires_grad=False)
            bwd = self.states[BACKWARD].params.bind(requires_grad=False)
            try:
                return pair_objective(pair, fwd, bwd, self.config.lam, self.config.agreement_loss).objective.item()
            except DomainError:
                return None
        (state,) = self.states.values()
        try:
            return sentence_log_likelihood(pair, state.params.bind(requires_grad=False)).log_likelihood.item()
        except UnderflowError:
            return None

    # bookkeeping

    def _validate(self, pool: ThreadPoolExecutor) -> Tuple[float, float]:
        """Greedy BLEU of the forward model and the mean objective on the validation corpus."""
        direction = FORWARD if self.joint else next(iter(self.states))
        params = self.states[direction].params
        vocab = self.validation.target_vocab

        def translate(pair: SentencePair) -> List[str]:
            return vocab.decode(greedy_decode(pair.source, params, self.config.max_len).tokens)

        candidates = list(pool.map(translate, self.validation.pairs))
        references = [[vocab.decode(pair.target)] for pair in self.validation.pairs]
        values = [v for v in pool.map(self._pair_value, self.validation.pairs) if v is not None]
        objective = float(np.mean(values)) if values else float("-inf")
        return bleu(candidates, references), objective

    def _record(self, epoch: int, pool: ThreadPoolExecutor) -> None:
        sums = self.progress.interval
        pairs = sums.get("pairs", 0.0)
        if not pairs:
            return
        ll_fwd = sums["ll_fwd"] / pairs
        ll_bwd = sums["ll_bwd"] / pairs
        agreement = sums["agreement"] / pairs
        lam = self.config.lam if self.joint else 0.0
        record = IntervalRecord(
            step=self.progress.step,
            epoch=epoch,
            objective=ll_fwd + ll_bwd - lam * agreement,
            ll_fwd=ll_fwd,
            ll_bwd=ll_bwd,
            agreement=agreement,
        )
        if self.validation is not None and len(self.validation):
            record.valid_bleu, record.valid_objective = self._validate(pool)
            score = [record.valid_bleu, record.valid_objective]
            if self.progress.best_score is None or tuple(score) > tuple(self.progress.best_score):
                self.progress.best_score = score
                for state in self.states.values():
                    state.best = state.params.copy()
        record.elapsed = time.perf_counter() - self.started
        self.history.append(record)
        self.progress.interval = {}

        logger.info(
            "step %d epoch %d: objective %.4f ll_fwd %.4f ll_bwd %.4f agreement %.4f valid_bleu %s",
            record.step, record.epoch, record.objective, record.ll_fwd, record.ll_bwd, record.agreement,
            "-" if record.valid_bleu is None else f"{record.valid_bleu:.2f}",
        )
        self._save()

    def _save(self, suffix: str = "") -> None:
        for direction, path in self.checkpoint_paths.items():
            checkpoint = Checkpoint({direction: self.states[direction]}, self.config, self.history, self.progress)
            save_checkpoint(checkpoint, f"{path}{suffix}")

    def _step(self, batch: List[SentencePair], epoch: int, pool: ThreadPoolExecutor) -> None:
        outcomes = list(pool.map(self._pair_outcome, batch))
        kept = [o for o in outcomes if not o.skipped]
        skipped = len(outcomes) - len(kept)
        if skipped:
            self.progress.skipped += skipped
            logger.warning("Skipped %d of %d pairs at step %d: agreement loss undefined",
                           skipped, len(batch), self.progress.step)
            if skipped > MAX_SKIPPED_FRACTION * len(batch):
                raise TrainingError(
                    f"agreement loss undefined for {skipped} of {len(batch)} pairs at step {self.progress.step}"
                )
        for outcome in kept:
            if not outcome.finite:
                raise TrainingDivergedError(
                    f"non-finite objective at step {self.progress.step}",
                    {"step": self.progress.step, "quantity": "objective"},
                )

        updated = {}
        for direction, state in self.states.items():
            grads = _sum_gradients([o.grads[direction] for o in kept])
            updated[direction] = optimizer_step(state.params, grads, state.optimizer, self.config)
        for direction, (params, optimizer) in updated.items():
            self.states[direction].params = params
            self.states[direction].optimizer = optimizer

        self.progress.step += 1
        sums = self.progress.interval
        sums["pairs"] = sums.get("pairs", 0.0) + len(kept)
        sums["ll_fwd"] = sums.get("ll_fwd", 0.0) + sum(o.ll_fwd for o in kept)
        sums["ll_bwd"] = sums.get("ll_bwd", 0.0) + sum(o.ll_bwd for o in kept)
        sums["agreement"] = sums.get("agreement", 0.0) + sum(o.delta for o in kept)

    def run(self) -> TrainingHistory:
        size = len(self.corpus)
        batch_size = self.config.batch_size
        workers = min(worker_count(self.config), batch_size)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for epoch in range(self.progress.epoch, self.config.max_epochs):
                order = np.random.default_rng([self.config.seed, epoch]).permutation(size)
                batches = [order[i:i + batch_size] for i in range(0, size, batch_size)]
                steps = tqdm(
                    range(self.progress.batch, len(batches)),
                    desc=f"epoch {epoch + 1}/{self.config.max_epochs}",
                    disable=not self.show_progress,
                )
                for b in steps:
                    try:
                        self._step([self.corpus.pairs[i] for i in batches[b]], epoch, pool)
                    except TrainingDivergedError as e:
                        last = self.history.last
                        e.snapshot.update(epoch=epoch, last_record=asdict(last) if last else None)
                        logger.error("Training diverged: %s (%s)", e, e.snapshot)
                        self._save(".diverged")
                        raise
                    self.progress.batch = b + 1
                    if self.progress.step % self.config.validation_interval == 0:
                        self._record(epoch, pool)
                self.progress.epoch = epoch + 1
                self.progress.batch = 0
            self._record(self.config.max_epochs - 1, pool)
        self._save()
        return self.history


def train_independent(
    corpus: ParallelCorpus,
    config: TrainingConfig,
    validation: Optional[ParallelCorpus] = None,
    init_seed: Optional[int] = None,
    resume: Optional[Checkpoint] = None,
    checkpoint_path: Optional[PathLike] = None,
    show_progress: bool = False,
    direction: str = FORWARD,
) -> Tuple[ModelParameters, TrainingHistory]:
    """Maximize sum log P(y|x) over corpus; returns the selected parameters and the history.

    The selected parameters are the best-validation ones when a validation
    corpus is given, else the final ones. Initialization uses init_seed, by
    default seed for the forward direction and seed + 1 for the backward one.
    """
    if not len(corpus):
        raise ContractError("cannot train on an empty corpus")
    if resume is not None:
        state = resume.models[direction]
        _check_vocabularies(state, corpus, direction)
        history, progress = resume.history, resume.progress
    else:
        if init_seed is None:
            init_seed = config.seed + (1 if direction == BACKWARD else 0)
        params = init_parameters(model_config(len(corpus.source_vocab), len(corpus.target_vocab), config), init_seed)
        state = _fresh_state(params, corpus)
        history, progress = TrainingHistory(), TrainerProgress()

    paths = {direction: checkpoint_path} if checkpoint_path is not None else None
    run = _TrainingRun(corpus, config, {direction: state}, validation, history, progress, paths, show_progress)
    history = run.run()
    return state.selected, history


def train_joint(
    corpus: ParallelCorpus,
    config: TrainingConfig,
    validation: Optional[ParallelCorpus] = None,
    init_from: Optional[Tuple[ModelParameters, ModelParameters]] = None,
    resume: Optional[Checkpoint] = None,
    checkpoint_paths: Optional[Mapping[str, PathLike]] = None,
    show_progress: bool = False,
) -> Tuple[ModelParameters, ModelParameters, TrainingHistory]:
    """Maximize the joint objective, updating both directions from each batch.

    The backward model reads every pair reversed. Models start from scratch
    (seed and seed + 1) unless init_from supplies pre-trained parameters.
    """
    if not len(corpus):
        raise ContractError("cannot train on an empty corpus")
    if config.lam == 0:
        logger.warning("lambda is 0: the agreement term is inert and both directions train independently")

    reversed_corpus = reverse_corpus(corpus)
    if resume is not None:
        states = {d: resume.models[d] for d in (FORWARD, BACKWARD)}
        _check_vocabularies(states[FORWARD], corpus, FORWARD)
        _check_vocabularies(states[BACKWARD], reversed_corpus, BACKWARD)
        history, progress = resume.history, resume.progress
    else:
        if init_from is not None:
            fwd_params, bwd_params = (p.copy() for p in init_from)
        else:
            fwd_params = init_parameters(model_config(len(corpus.source_vocab), len(corpus.target_vocab), config), config.seed)
            bwd_params = init_parameters(model_config(len(corpus.target_vocab), len(corpus.source_vocab), config), config.seed + 1)
        states = {FORWARD: _fresh_state(fwd_params, corpus), BACKWARD: _fresh_state(bwd_params, reversed_corpus)}
        for direction, state in states.items():
            expected = (len(state.source_vocab), len(state.target_vocab))
            actual = (state.params.config.source_vocab_size, state.params.config.target_vocab_size)
            if expected != actual:
                raise ContractError(f"{direction} initial parameters do not fit the corpus vocabularies")
        history, progress = TrainingHistory(), TrainerProgress()

    run = _TrainingRun(corpus, config, states, validation, history, progress, checkpoint_paths, show_progress)
    history = run.run()
    return states[FORWARD].selected, states[BACKWARD].selected, history


def checkpoint_paths_for(directory: PathLike, directions: Sequence[str] = (FORWARD, BACKWARD)) -> Dict[str, Path]:
    """Checkpoint file of each direction inside a run directory."""
    return {direction: Path(directory) / f"{direction}.ckpt" for direction in directions}

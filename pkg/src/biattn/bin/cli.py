import argparse
import logging
import sys
import time
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from ..agreement import LossKind
from ..corpus import (
    ParallelCorpus,
    SentencePair,
    SyntheticTask,
    Vocabulary,
    build_vocab,
    generate_synthetic,
    load_parallel,
    read_pharaoh,
    reverse_corpus,
    split_corpus,
    write_parallel,
)
from ..decode import extract_one_to_one, force_decode, load_lexicon
from ..errors import BiattnError, ContractError, UsageError
from ..metrics import (
    bleu,
    corpus_counts,
    entropy_table,
    format_entropy_table,
    paired_bootstrap,
)
from ..trainer import (
    BACKWARD,
    FORWARD,
    Checkpoint,
    DirectionState,
    TrainingConfig,
    checkpoint_paths_for,
    load_checkpoint,
    resolve_config,
    train_independent,
    train_joint,
    worker_count,
)
from .manifest import RunManifest, write_atomic, write_manifest
from .reports import (
    alignment_error,
    force_decode_all,
    held_out_bleu,
    hypothesis_links,
    load_direction,
    mean_disagreement,
    mean_entropy,
    model_orientation,
    model_pairs,
    parallel_map,
    read_token_lines,
    translate_sentences,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2

# argparse dest -> config key
CONFIG_FLAGS = {
    "lam": "lambda",
    "loss": "agreement_loss",
    "embed_dim": "embed_dim",
    "hidden_dim": "hidden_dim",
    "attention_dim": "attention_dim",
    "batch_size": "batch_size",
    "epochs": "max_epochs",
    "learning_rate": "learning_rate",
    "clip_norm": "clip_norm",
    "seed": "seed",
    "validation_interval": "validation_interval",
    "max_len": "max_len",
    "vocab_cap": "vocab_cap",
    "threads": "threads",
}

SWEEP_SETTINGS = ("independent", "soa", "sos", "mul")
SWEEP_COLUMNS = ("setting", "direction", "bleu", "aer", "agreement_mul", "entropy")
EVAL_COLUMNS = ("metric", "direction", "value")
UNBOUNDED_LENGTH = sys.maxsize


def _require_file(path: Optional[str], what: str) -> None:
    if not path:
        raise UsageError(f"missing {what}")
    if not Path(path).is_file():
        raise UsageError(f"{what} {path} does not exist")


def _length_range(text: str) -> Tuple[int, int]:
    try:
        low, high = (int(part) for part in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected MIN:MAX, got {text!r}") from None
    return low, high


def _task(name: str) -> SyntheticTask:
    try:
        return SyntheticTask.parse(name)
    except ContractError as e:
        raise UsageError(str(e)) from None


def _resolve(args, base: Optional[TrainingConfig] = None) -> TrainingConfig:
    overrides = {
        key: str(getattr(args, dest))
        for dest, key in CONFIG_FLAGS.items()
        if getattr(args, dest, None) is not None
    }
    if args.config:
        _require_file(args.config, "config file")
    return resolve_config(args.config, overrides, base)


def _workers(args) -> int:
    return worker_count(TrainingConfig(threads=getattr(args, "threads", None) or 1))


def _file_vocab(path: str, cap: int) -> Vocabulary:
    return build_vocab((token for line in read_token_lines(path) for token in line), cap)


def _training_data(
    args, config: TrainingConfig, vocabs: Optional[Tuple[Vocabulary, Vocabulary]] = None
) -> Tuple[ParallelCorpus, Optional[ParallelCorpus], Dict[str, str]]:
    """Training corpus, optional validation corpus and the input description for the manifest."""
    if args.data:
        if args.src or args.tgt:
            raise UsageError("--data and --src/--tgt are mutually exclusive")
        task = _task(args.data)
        corpus = generate_synthetic(task, args.vocab_size, args.pairs, args.length, config.seed)
        if vocabs is not None and (corpus.source_vocab, corpus.target_vocab) != vocabs:
            raise ContractError("synthetic vocabularies do not match the checkpoint")
        inputs = {"data": task.value, "vocab_size": str(args.vocab_size), "pairs": str(args.pairs),
                  "length": f"{args.length[0]}:{args.length[1]}"}
        validation = None
        if args.held_out:
            corpus, validation = split_corpus(corpus, args.held_out, config.seed)
            inputs["held_out"] = str(args.held_out)
        return corpus, validation, inputs

    if not args.src or not args.tgt:
        raise UsageError("training data needs --data TASK or both --src and --tgt")
    _require_file(args.src, "source file")
    _require_file(args.tgt, "target file")
    if args.gold:
        _require_file(args.gold, "gold alignment file")
    if vocabs is None:
        vocabs = (_file_vocab(args.src, config.vocab_cap), _file_vocab(args.tgt, config.vocab_cap))
    corpus = load_parallel(args.src, args.tgt, vocabs[0], vocabs[1], config.max_len, args.gold)
    inputs = {"src": args.src, "tgt": args.tgt}
    if args.gold:
        inputs["gold"] = args.gold

    validation = None
    if args.valid_src or args.valid_tgt:
        _require_file(args.valid_src, "validation source file")
        _require_file(args.valid_tgt, "validation target file")
        if args.valid_gold:
            _require_file(args.valid_gold, "validation gold file")
        validation = load_parallel(args.valid_src, args.valid_tgt, vocabs[0], vocabs[1], config.max_len, args.valid_gold)
        inputs.update(valid_src=args.valid_src, valid_tgt=args.valid_tgt)
    elif args.held_out:
        corpus, validation = split_corpus(corpus, args.held_out, config.seed)
        inputs["held_out"] = str(args.held_out)
    return corpus, validation, inputs


def _model_corpus(state: DirectionState, direction: str, src: str, tgt: str, gold: Optional[str] = None) -> ParallelCorpus:
    """Source-file / target-file data encoded with the vocabularies of a model of either direction."""
    _require_file(src, "source file")
    _require_file(tgt, "target file")
    if gold:
        _require_file(gold, "gold alignment file")
    src_vocab, tgt_vocab = model_orientation(direction, state.source_vocab, state.target_vocab)
    return load_parallel(src, tgt, src_vocab, tgt_vocab, UNBOUNDED_LENGTH, gold)


def _manifest(args, command: str, **kwargs) -> RunManifest:
    return RunManifest(command=command, argv=list(args.argv), **kwargs)


def cmd_synth(args) -> int:
    started = time.perf_counter()
    task = _task(args.data)
    corpus = generate_synthetic(task, args.vocab_size, args.pairs, args.length, args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    train, valid = split_corpus(corpus, args.held_out, args.seed) if args.held_out else (corpus, None)
    outputs = write_parallel(train, out / "train")
    if valid is not None:
        outputs += write_parallel(valid, out / "valid")
    logger.info("Wrote %d training and %d held-out %s pairs to %s",
                len(train), len(valid) if valid else 0, task.value, out)
    write_manifest(
        _manifest(args, "synth", inputs={"data": task.value, "vocab_size": str(args.vocab_size),
                                         "pairs": str(args.pairs), "held_out": str(args.held_out)},
                  outputs=[str(p) for p in outputs], seed=args.seed,
                  elapsed=time.perf_counter() - started),
        out,
    )
    return EXIT_OK


def cmd_train(args) -> int:
    started = time.perf_counter()
    if args.mode == "independent" and args.init_from:
        raise UsageError("--init-from only applies to joint training")
    if args.resume and args.init_from:
        raise UsageError("--resume and --init-from are mutually exclusive")

    base, vocabs, resumed = None, None, {}
    if args.resume:
        for direction, path in checkpoint_paths_for(args.resume).items():
            _require_file(str(path), "checkpoint")
            resumed[direction] = load_checkpoint(path)
        base = resumed[FORWARD].config
        fwd_state = resumed[FORWARD].models[FORWARD]
        vocabs = (fwd_state.source_vocab, fwd_state.target_vocab)
    config = _resolve(args, base)
    if args.mode == "joint" and config.agreement_loss is None:
        raise UsageError("joint training needs --loss soa, sos or mul")

    init_from = None
    if args.init_from:
        _, fwd_state = load_direction(args.init_from, FORWARD)
        _, bwd_state = load_direction(args.init_from, BACKWARD)
        vocabs = (fwd_state.source_vocab, fwd_state.target_vocab)
        init_from = (fwd_state.selected, bwd_state.selected)

    corpus, validation, inputs = _training_data(args, config, vocabs)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    paths = checkpoint_paths_for(out)
    timings = {}

    if args.mode == "joint":
        resume = None
        if resumed:
            fwd, bwd = resumed[FORWARD], resumed[BACKWARD]
            resume = Checkpoint({FORWARD: fwd.models[FORWARD], BACKWARD: bwd.models[BACKWARD]},
                                config, fwd.history, fwd.progress)
        _, _, history = train_joint(corpus, config, validation, init_from, resume, paths, args.progress)
        histories = {"history.tsv": history}
    else:
        _, fwd_history = train_independent(
            corpus, config, validation, resume=resumed.get(FORWARD),
            checkpoint_path=paths[FORWARD], show_progress=args.progress, direction=FORWARD,
        )
        timings["train_fwd"] = time.perf_counter() - started
        _, bwd_history = train_independent(
            reverse_corpus(corpus), config, reverse_corpus(validation) if validation else None,
            resume=resumed.get(BACKWARD), checkpoint_path=paths[BACKWARD],
            show_progress=args.progress, direction=BACKWARD,
        )
        histories = {"history.tsv": fwd_history, "history.bwd.tsv": bwd_history}

    for name, history in histories.items():
        history.write_tsv(out / name)
        if history.last is not None:
            timings[f"{name}:last_interval"] = history.last.elapsed
    outputs = [str(p) for p in paths.values()] + [str(out / name) for name in histories]
    write_manifest(
        _manifest(args, "train", config=config.to_mapping(), inputs=inputs, outputs=outputs,
                  seed=config.seed, elapsed=time.perf_counter() - started, timings=timings),
        out,
    )
    return EXIT_OK


def cmd_translate(args) -> int:
    started = time.perf_counter()
    if args.beam < 1:
        raise UsageError(f"--beam must be at least 1, got {args.beam}")
    if args.lexicon and not args.replace_unk:
        raise UsageError("--lexicon requires --replace-unk")
    _require_file(args.src, "source file")
    if args.lexicon:
        _require_file(args.lexicon, "lexicon")
    direction, state = load_direction(args.checkpoint, args.direction)
    lexicon = load_lexicon(args.lexicon) if args.lexicon else None

    sentences = read_token_lines(args.src)
    max_len = args.max_len or TrainingConfig().max_len
    results = translate_sentences(sentences, state, args.beam, max_len, args.replace_unk, lexicon, _workers(args))
    write_atomic(args.out, "".join(" ".join(tokens) + "\n" for tokens, _ in results))
    outputs = [args.out]
    if args.emit_align:
        links = [hypothesis_links(hyp, len(src)) for src, (_, hyp) in zip(sentences, results)]
        write_atomic(args.emit_align, "".join(link.to_pharaoh() + "\n" for link in links))
        outputs.append(args.emit_align)
    logger.info("Translated %d sentences with the %s model", len(sentences), direction)

    write_manifest(
        _manifest(args, "translate", inputs={"checkpoint": args.checkpoint, "src": args.src, "direction": direction},
                  outputs=outputs, elapsed=time.perf_counter() - started),
        args.out,
    )
    return EXIT_OK


def cmd_align(args) -> int:
    started = time.perf_counter()
    _require_file(args.src, "source file")
    _require_file(args.tgt, "target file")
    direction, state = load_direction(args.checkpoint, args.direction)
    sources, targets = read_token_lines(args.src), read_token_lines(args.tgt)
    if len(sources) != len(targets):
        raise UsageError(f"line counts differ: {args.src} has {len(sources)}, {args.tgt} has {len(targets)}")
    inputs, outputs_side = model_orientation(direction, sources, targets)

    def align(index: int):
        x, y = inputs[index], outputs_side[index]
        if not x or not y:
            return None
        pair = SentencePair(tuple(state.source_vocab.encode(x)), tuple(state.target_vocab.encode(y)))
        return force_decode(pair, state.selected)

    matrices = parallel_map(align, range(len(sources)), _workers(args))
    lines, soft = [], ["sentence\ttarget\tweights\n"]
    for i, matrix in enumerate(matrices):
        if matrix is None:
            lines.append("\n")
            continue
        links = extract_one_to_one(matrix, exclude_eos=True)
        if direction == BACKWARD:
            links = links.transposed()
        lines.append(links.to_pharaoh() + "\n")
        for n, row in enumerate(matrix.weights):
            soft.append(f"{i}\t{n}\t" + "\t".join(repr(float(w)) for w in row) + "\n")

    write_atomic(args.out, "".join(lines))
    outputs = [args.out]
    if args.soft_out:
        write_atomic(args.soft_out, "".join(soft))
        outputs.append(args.soft_out)
    logger.info("Aligned %d sentence pairs with the %s model", len(sources), direction)
    write_manifest(
        _manifest(args, "align", inputs={"checkpoint": args.checkpoint, "src": args.src, "tgt": args.tgt,
                                         "direction": direction},
                  outputs=outputs, elapsed=time.perf_counter() - started),
        args.out,
    )
    return EXIT_OK


def _read_links(path: str) -> List[frozenset]:
    return [gold.all_possible for gold in read_pharaoh(path)]


def _eval_files(args, rows: List[Tuple[str, str, float]]) -> Dict[str, str]:
    inputs = {}
    direction = args.direction or FORWARD
    if args.hyp:
        _require_file(args.hyp, "hypothesis file")
        if not args.ref:
            raise UsageError("--hyp needs at least one --ref")
        for ref in args.ref:
            _require_file(ref, "reference file")
        candidates = read_token_lines(args.hyp)
        ref_streams = [read_token_lines(ref) for ref in args.ref]
        if any(len(stream) != len(candidates) for stream in ref_streams):
            raise UsageError("hypothesis and reference files differ in line count")
        references = [list(refs) for refs in zip(*ref_streams)]
        rows.append(("bleu", direction, bleu(candidates, references)))
        inputs.update(hyp=args.hyp, ref=",".join(args.ref))
        if args.compare:
            _require_file(args.compare, "comparison hypothesis file")
            other = read_token_lines(args.compare)
            if len(other) != len(candidates):
                raise UsageError("comparison file differs in line count")
            rows.append(("bleu_compare", direction, bleu(other, references)))
            p = paired_bootstrap(candidates, other, references, args.resamples, args.seed or 0)
            rows.append(("bootstrap_p", direction, p))
            inputs["compare"] = args.compare
    if args.aer:
        _require_file(args.aer, "predicted alignment file")
        if not args.gold:
            raise UsageError("--aer needs --gold")
        _require_file(args.gold, "gold alignment file")
        predicted, gold = _read_links(args.aer), read_pharaoh(args.gold)
        if len(predicted) != len(gold):
            raise UsageError("predicted and gold alignment files differ in line count")
        counts = corpus_counts(predicted, gold)
        rows += [("aer", direction, counts.aer), ("precision", direction, counts.precision),
                 ("recall", direction, counts.recall)]
        inputs.update(aer=args.aer, gold=args.gold)
    return inputs


def _eval_models(args, rows: List[Tuple[str, str, float]]) -> Dict[str, str]:
    checkpoint = Path(args.checkpoint)
    directions = [FORWARD, BACKWARD] if checkpoint.is_dir() else [args.direction]
    models = dict(load_direction(checkpoint, d) for d in directions)
    first, state = next(iter(models.items()))
    corpus = _model_corpus(state, first, args.src, args.tgt, args.gold)
    max_len = args.max_len or TrainingConfig().max_len
    workers = _workers(args)
    for direction, model in models.items():
        rows.append(("bleu", direction, held_out_bleu(corpus, model.selected, direction, args.beam, max_len, workers)))
        if args.gold:
            rows.append(("aer", direction, alignment_error(corpus, model.selected, direction, workers)))
        rows.append(("entropy", direction, mean_entropy(corpus, model.selected, direction, workers)))
    if set(models) == {FORWARD, BACKWARD}:
        agreement = mean_disagreement(
            corpus, models[FORWARD].selected, models[BACKWARD].selected, LossKind.MUL, workers
        )
        rows.append(("agreement_mul", "both", agreement))
    inputs = {"checkpoint": args.checkpoint, "src": args.src, "tgt": args.tgt}
    if args.gold:
        inputs["gold"] = args.gold
    return inputs


def cmd_eval(args) -> int:
    started = time.perf_counter()
    if not (args.hyp or args.aer or args.checkpoint):
        raise UsageError("eval needs --hyp/--ref, --aer/--gold or --checkpoint with --src/--tgt")
    rows: List[Tuple[str, str, float]] = []
    inputs = _eval_models(args, rows) if args.checkpoint else _eval_files(args, rows)
    table = "\t".join(EVAL_COLUMNS) + "\n" + "".join(f"{m}\t{d}\t{v!r}\n" for m, d, v in rows)
    if args.out:
        write_atomic(args.out, table)
        write_manifest(
            _manifest(args, "eval", inputs=inputs, outputs=[args.out], elapsed=time.perf_counter() - started),
            args.out,
        )
    else:
        sys.stdout.write(table)
    return EXIT_OK


def cmd_analyze(args) -> int:
    started = time.perf_counter()
    direction = args.direction or FORWARD
    _, independent = load_direction(args.independent, direction)
    _, joint = load_direction(args.joint, direction)
    if (independent.source_vocab, independent.target_vocab) != (joint.source_vocab, joint.target_vocab):
        raise ContractError("the two models were trained with different vocabularies")
    corpus = _model_corpus(independent, direction, args.src, args.tgt)
    pairs = model_pairs(corpus, direction)
    workers = _workers(args)
    targets = [independent.target_vocab.decode(pair.target) for pair in pairs]
    rows = entropy_table(
        targets,
        force_decode_all(pairs, independent.selected, workers),
        force_decode_all(pairs, joint.selected, workers),
    )
    write_atomic(args.out, format_entropy_table(rows))
    logger.info("Wrote average attention entropy of %d target words to %s", len(rows), args.out)
    write_manifest(
        _manifest(args, "analyze", inputs={"independent": args.independent, "joint": args.joint,
                                           "src": args.src, "tgt": args.tgt, "direction": direction},
                  outputs=[args.out], elapsed=time.perf_counter() - started),
        args.out,
    )
    return EXIT_OK


def cmd_sweep(args) -> int:
    started = time.perf_counter()
    config = _resolve(args)
    settings = [s.strip() for s in args.settings.split(",") if s.strip()]
    unknown = set(settings) - set(SWEEP_SETTINGS)
    if unknown:
        raise UsageError(f"unknown sweep settings {sorted(unknown)}; choose from {', '.join(SWEEP_SETTINGS)}")
    corpus, validation, inputs = _training_data(args, config)
    if validation is None or not len(validation):
        raise UsageError("sweep needs validation data: --held-out N or --valid-src/--valid-tgt")
    has_gold = all(pair.gold is not None for pair in validation.pairs)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    workers = min(worker_count(config), len(validation))

    lines = ["\t".join(SWEEP_COLUMNS) + "\n"]
    timings = {}
    for setting in settings:
        setting_started = time.perf_counter()
        paths = checkpoint_paths_for(out / setting)
        if setting == "independent":
            fwd, _ = train_independent(corpus, config, validation, checkpoint_path=paths[FORWARD], direction=FORWARD)
            bwd, _ = train_independent(reverse_corpus(corpus), config, reverse_corpus(validation),
                                       checkpoint_path=paths[BACKWARD], direction=BACKWARD)
        else:
            joint_config = TrainingConfig.from_mapping({"agreement_loss": setting}, base=config)
            fwd, bwd, _ = train_joint(corpus, joint_config, validation, checkpoint_paths=paths)
        timings[setting] = time.perf_counter() - setting_started

        agreement = mean_disagreement(validation, fwd, bwd, LossKind.MUL, workers)
        for direction, params in ((FORWARD, fwd), (BACKWARD, bwd)):
            score = held_out_bleu(validation, params, direction, 1, config.max_len, workers)
            error = alignment_error(validation, params, direction, workers) if has_gold else None
            entropy = mean_entropy(validation, params, direction, workers)
            cells = [setting, direction, repr(score), "-" if error is None else repr(error),
                     repr(agreement), repr(entropy)]
            lines.append("\t".join(cells) + "\n")
        logger.info("Sweep setting %s done in %.1fs", setting, timings[setting])

    write_atomic(out / "sweep.tsv", "".join(lines))
    write_manifest(
        _manifest(args, "sweep", config=config.to_mapping(), inputs=inputs, outputs=[str(out / "sweep.tsv")],
                  seed=config.seed, elapsed=time.perf_counter() - started, timings=timings),
        out,
    )
    return EXIT_OK


def _logging_options() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(add_help=False)
    parser.add_argument("--debug", action="store_true", help="Enable debug logging")
    return parser


def _config_options() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(add_help=False)
    parser.add_argument("--config", help="key=value configuration file")
    parser.add_argument("--lambda", dest="lam", type=float, help="Weight of the agreement term")
    parser.add_argument("--loss", choices=["soa", "sos", "mul", "none"], help="Agreement loss")
    parser.add_argument("--seed", type=int, help="Random seed")
    parser.add_argument("--epochs", type=int, help="Maximum number of epochs")
    parser.add_argument("--batch-size", type=int)
    parser.add_argument("--learning-rate", type=float)
    parser.add_argument("--embed-dim", type=int)
    parser.add_argument("--hidden-dim", type=int)
    parser.add_argument("--attention-dim", type=int)
    parser.add_argument("--clip-norm", type=float)
    parser.add_argument("--validation-interval", type=int, help="Optimizer steps between history records")
    parser.add_argument("--max-len", type=int, help="Longest sentence kept for training")
    parser.add_argument("--vocab-cap", type=int)
    parser.add_argument("--threads", type=int, help="Worker threads (capped by BIATTN_THREADS)")
    return parser


def _data_options() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(add_help=False)
    parser.add_argument("--data", help="Synthetic task: copy-task, reverse-task or lexicon-task")
    parser.add_argument("--src", help="Source side of the parallel text")
    parser.add_argument("--tgt", help="Target side of the parallel text")
    parser.add_argument("--gold", help="Pharaoh gold alignments of the parallel text")
    parser.add_argument("--valid-src", help="Validation source file")
    parser.add_argument("--valid-tgt", help="Validation target file")
    parser.add_argument("--valid-gold", help="Validation gold alignments")
    parser.add_argument("--held-out", type=int, default=0, help="Pairs split off for validation")
    _synthetic_options(parser)
    return parser


def _synthetic_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--vocab-size", type=int, default=20, help="Word types of a synthetic task")
    parser.add_argument("--pairs", type=int, default=2000, help="Pairs of a synthetic task")
    parser.add_argument("--length", type=_length_range, default=(3, 10), help="Synthetic sentence lengths MIN:MAX")


def build_parser() -> argparse.ArgumentParser:
    logging_options = _logging_options()
    parser = argparse.ArgumentParser(
        prog="biattn",
        description="Agreement-based joint training of bidirectional attention translation models",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    synth = commands.add_parser("synth", parents=[logging_options], help="Generate a synthetic parallel corpus")
    synth.add_argument("--data", required=True, help="copy-task, reverse-task or lexicon-task")
    _synthetic_options(synth)
    synth.add_argument("--held-out", type=int, default=0)
    synth.add_argument("--seed", type=int, default=TrainingConfig().seed)
    synth.add_argument("--out", required=True, help="Output directory")
    synth.set_defaults(handler=cmd_synth)

    train = commands.add_parser("train", parents=[logging_options, _config_options(), _data_options()],
                                help="Train both directions independently or jointly")
    train.add_argument("--mode", choices=["independent", "joint"], default="joint")
    train.add_argument("--init-from", help="Run directory with fwd.ckpt and bwd.ckpt to start joint training from")
    train.add_argument("--resume", help="Run directory to resume")
    train.add_argument("--out", required=True, help="Output directory")
    train.add_argument("--progress", action="store_true", help="Show progress bars")
    train.set_defaults(handler=cmd_train)

    translate = commands.add_parser("translate", parents=[logging_options], help="Translate a source file")
    translate.add_argument("--checkpoint", required=True, help="Checkpoint file or run directory")
    translate.add_argument("--direction", choices=[FORWARD, BACKWARD])
    translate.add_argument("--src", required=True)
    translate.add_argument("--out", required=True)
    translate.add_argument("--beam", type=int, default=1)
    translate.add_argument("--max-len", type=int, help="Longest translation in tokens")
    translate.add_argument("--replace-unk", action="store_true", help="Replace unknown words via attention")
    translate.add_argument("--lexicon", help="source<TAB>target dictionary for --replace-unk")
    translate.add_argument("--emit-align", help="Write Pharaoh links of each translation here")
    translate.add_argument("--threads", type=int)
    translate.set_defaults(handler=cmd_translate)

    align = commands.add_parser("align", parents=[logging_options], help="Force-decode parallel text into links")
    align.add_argument("--checkpoint", required=True)
    align.add_argument("--direction", choices=[FORWARD, BACKWARD])
    align.add_argument("--src", required=True)
    align.add_argument("--tgt", required=True)
    align.add_argument("--out", required=True, help="Pharaoh links, source-file index first")
    align.add_argument("--soft-out", help="Write the soft attention matrices as TSV here")
    align.add_argument("--threads", type=int)
    align.set_defaults(handler=cmd_align)

    evaluate = commands.add_parser("eval", parents=[logging_options], help="BLEU and alignment error rate")
    evaluate.add_argument("--hyp", help="Translations to score")
    evaluate.add_argument("--ref", action="append", help="Reference translations (repeatable)")
    evaluate.add_argument("--compare", help="Second system for paired bootstrap resampling")
    evaluate.add_argument("--resamples", type=int, default=1000)
    evaluate.add_argument("--aer", help="Predicted Pharaoh links to score")
    evaluate.add_argument("--gold", help="Gold Pharaoh links")
    evaluate.add_argument("--checkpoint", help="Evaluate models: checkpoint file or run directory")
    evaluate.add_argument("--src")
    evaluate.add_argument("--tgt")
    evaluate.add_argument("--direction", choices=[FORWARD, BACKWARD])
    evaluate.add_argument("--beam", type=int, default=1)
    evaluate.add_argument("--max-len", type=int)
    evaluate.add_argument("--seed", type=int)
    evaluate.add_argument("--threads", type=int)
    evaluate.add_argument("--out", help="TSV output (default stdout)")
    evaluate.set_defaults(handler=cmd_eval)

    analyze = commands.add_parser("analyze", parents=[logging_options],
                                  help="Average attention entropy per target word for two models")
    analyze.add_argument("--independent", required=True, help="Independently trained checkpoint or run directory")
    analyze.add_argument("--joint", required=True, help="Jointly trained checkpoint or run directory")
    analyze.add_argument("--direction", choices=[FORWARD, BACKWARD])
    analyze.add_argument("--src", required=True)
    analyze.add_argument("--tgt", required=True)
    analyze.add_argument("--out", required=True)
    analyze.add_argument("--threads", type=int)
    analyze.set_defaults(handler=cmd_analyze)

    sweep = commands.add_parser("sweep", parents=[logging_options, _config_options(), _data_options()],
                                help="Compare independent training with each agreement loss")
    sweep.add_argument("--settings", default=",".join(SWEEP_SETTINGS))
    sweep.add_argument("--out", required=True)
    sweep.set_defaults(handler=cmd_sweep)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    args.argv = argv

    log_level = logging.DEBUG if args.debug else logging.INFO
    logging.basicConfig(
        level=log_level, format="%(asctime)s - %(name)s - %(levelname)s - %(message)s"
    )

    try:
        return args.handler(args)
    except UsageError as e:
        logger.error("%s", e)
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    except (BiattnError, OSError) as e:
        logger.error("%s: %s", type(e).__name__, e)
        return EXIT_FAILURE
    except KeyboardInterrupt:
        logger.info("Interrupted")
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())

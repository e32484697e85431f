"""End-to-end training runs on the synthetic tasks. Deselected by default (pytest -m slow)."""
from dataclasses import replace

import numpy as np
import pytest

from biattn.agreement import LossKind
from biattn.bin.cli import main
from biattn.bin.reports import alignment_error, held_out_bleu, mean_disagreement, mean_entropy, read_token_lines
from biattn.corpus import generate_synthetic, reverse_corpus, split_corpus
from biattn.models import init_parameters, sentence_log_likelihood
from biattn.trainer import BACKWARD, FORWARD, TrainingConfig, model_config, train_independent, train_joint

pytestmark = pytest.mark.slow

SEEDS = range(5)


def cross_entropy(corpus, params):
    """Per-token negative log-likelihood, EOS included."""
    total = sum(sentence_log_likelihood(pair, params.bind(requires_grad=False)).log_likelihood.item()
                for pair in corpus.pairs)
    return -total / sum(len(pair.target) + 1 for pair in corpus.pairs)


def test_independent_training_halves_the_cross_entropy():
    corpus = generate_synthetic("copy", vocab_size=20, num_pairs=2000, len_range=(3, 10), seed=0)
    config = TrainingConfig(batch_size=16, max_epochs=5, learning_rate=0.005)
    initial = init_parameters(
        model_config(len(corpus.source_vocab), len(corpus.target_vocab), config), seed=config.seed
    )

    trained, _ = train_independent(corpus, config)

    assert cross_entropy(corpus, trained) <= 0.5 * cross_entropy(corpus, initial)


def test_agreement_weight_lowers_held_out_disagreement():
    train, held = split_corpus(generate_synthetic("copy", 10, 700, (3, 8), seed=1), held_out=100, seed=1)
    config = TrainingConfig(embed_dim=16, hidden_dim=16, batch_size=16, max_epochs=8, learning_rate=0.01,
                            agreement_loss=LossKind.MUL)

    decoupled = train_joint(train, replace(config, lam=0.0))
    coupled = train_joint(train, replace(config, lam=1.0))

    assert mean_disagreement(held, coupled[0], coupled[1]) < mean_disagreement(held, decoupled[0], decoupled[1])


def test_copy_model_reproduces_its_input(tmp_path):
    data, run = tmp_path / "data", tmp_path / "run"
    assert main(["synth", "--data", "copy-task", "--vocab-size", "10", "--pairs", "2100", "--length", "3:8",
                 "--held-out", "100", "--out", str(data)]) == 0
    assert main(["train", "--mode", "independent", "--src", str(data / "train.src"), "--tgt", str(data / "train.tgt"),
                 "--valid-src", str(data / "valid.src"), "--valid-tgt", str(data / "valid.tgt"),
                 "--embed-dim", "32", "--hidden-dim", "32", "--batch-size", "16", "--epochs", "10",
                 "--learning-rate", "0.005", "--validation-interval", "125", "--out", str(run)]) == 0

    out = tmp_path / "hyp.txt"
    assert main(["translate", "--checkpoint", str(run), "--src", str(data / "valid.src"), "--out", str(out)]) == 0

    sources = read_token_lines(data / "valid.src")
    copies = sum(hyp == src for hyp, src in zip(read_token_lines(out), sources))
    assert copies >= 0.95 * len(sources)


@pytest.fixture(scope="module")
def lexicon_runs():
    """Independent and joint (MUL, lambda 1) models on the lexicon task, one pair of runs per seed."""
    corpus = generate_synthetic("lexicon", vocab_size=30, num_pairs=3300, len_range=(3, 10), seed=0)
    train, held = split_corpus(corpus, held_out=300, seed=0)
    runs = []
    for seed in SEEDS:
        config = TrainingConfig(max_epochs=30, learning_rate=0.002, validation_interval=94, seed=seed,
                                lam=1.0, agreement_loss=LossKind.MUL)
        fwd, _ = train_independent(train, config, held)
        bwd, _ = train_independent(reverse_corpus(train), config, reverse_corpus(held), direction=BACKWARD)
        joint_fwd, joint_bwd, _ = train_joint(train, config, held)
        runs.append({"independent": (fwd, bwd), "joint": (joint_fwd, joint_bwd)})
    return held, runs


@pytest.mark.parametrize("mode", ["independent", "joint"])
def test_lexicon_task_is_learned(lexicon_runs, mode):
    held, runs = lexicon_runs
    fwd, _ = runs[0][mode]
    assert held_out_bleu(held, fwd, FORWARD, beam=1, max_len=50) >= 90.0


def test_joint_models_align_at_least_as_well(lexicon_runs):
    held, runs = lexicon_runs

    def mean_aer(mode):
        return np.mean([
            (alignment_error(held, run[mode][0], FORWARD) + alignment_error(held, run[mode][1], BACKWARD)) / 2
            for run in runs
        ])

    def mean_delta(mode):
        return np.mean([mean_disagreement(held, *run[mode]) for run in runs])

    assert mean_aer("joint") <= mean_aer("independent")
    assert mean_delta("joint") < mean_delta("independent")


def test_joint_attention_is_sharper(lexicon_runs):
    held, runs = lexicon_runs

    def mean_over_seeds(mode):
        return np.mean([
            (mean_entropy(held, run[mode][0], FORWARD) + mean_entropy(held, run[mode][1], BACKWARD)) / 2
            for run in runs
        ])

    assert mean_over_seeds("joint") < mean_over_seeds("independent")

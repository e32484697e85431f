import numpy as np
import pytest

from biattn.corpus import SentencePair, generate_synthetic
from biattn.models import ModelConfig, init_parameters
from biattn.trainer import TrainingConfig


@pytest.fixture
def tiny_config():
    # 4 specials + 8 word types on both sides
    return ModelConfig(source_vocab_size=12, target_vocab_size=12, embed_dim=4, hidden_dim=4)


@pytest.fixture
def tiny_params(tiny_config):
    return init_parameters(tiny_config, seed=7)


@pytest.fixture
def pair():
    return SentencePair(source=(4, 5, 6), target=(7, 8))


@pytest.fixture
def copy_corpus():
    return generate_synthetic("copy", vocab_size=8, num_pairs=12, len_range=(2, 4), seed=0)


@pytest.fixture
def train_config():
    return TrainingConfig(
        embed_dim=4,
        hidden_dim=4,
        batch_size=4,
        max_epochs=2,
        validation_interval=2,
        learning_rate=0.01,
        max_len=8,
    )


@pytest.fixture
def rng():
    return np.random.default_rng(2024)


def row_stochastic(rng, rows, cols):
    weights = rng.uniform(0.1, 1.0, size=(rows, cols))
    return weights / weights.sum(axis=1, keepdims=True)

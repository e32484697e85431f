from .parallel import (
    ParallelCorpus,
    SentencePair,
    load_parallel,
    reverse_corpus,
    split_corpus,
    write_parallel,
)
from .pharaoh import GoldAlignment, format_links, read_pharaoh
from .synthetic import SyntheticTask, generate_synthetic
from .vocab import BOS_ID, EOS_ID, PAD_ID, SPECIALS, UNK_ID, Vocabulary, build_vocab

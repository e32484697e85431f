from .aer import AlignmentCounts, aer, alignment_counts, corpus_aer, corpus_counts, precision_recall
from .bleu import BleuStatistics, bleu, bleu_statistics, corpus_statistics, score_from_statistics, sentence_statistics
from .bootstrap import paired_bootstrap
from .entropy import (
    EntropyRecord,
    EntropyRow,
    attention_entropy,
    average_attention_entropy,
    entropy_table,
    format_entropy_table,
    frequency_bands,
    occurrence_entropies,
)

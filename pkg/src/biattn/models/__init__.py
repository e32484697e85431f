from .config import ModelConfig
from .parameters import ModelParameters, ParameterBinding, init_parameters, parameter_shapes
from .translator import (
    AlignmentMatrix,
    EncodedSource,
    SentenceScore,
    attention_row,
    context,
    decoder_step,
    encode,
    initial_state,
    output_distribution,
    sentence_log_likelihood,
)

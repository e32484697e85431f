from .links import LinkSet, extract_one_to_one
from .search import Hypothesis, beam_decode, force_decode, greedy_decode
from .unknowns import load_lexicon, replace_unknowns

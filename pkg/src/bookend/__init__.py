"""Bookended story generation toolkit.

Generates stories whose first and last sentences are related, infilling the
middle sentences at dynamically chosen positions, and evaluates endpoint
relatedness and story quality. Model backends are pluggable; deterministic
stubs ship in-package.
"""

from .config import Markers
from .corpus import CorpusSplit, Sentence, Story, load_corpus, split_train_val, write_stories
from .sampling import PhraseList

__version__ = "0.1.0"

__all__ = [
    "CorpusSplit",
    "Markers",
    "PhraseList",
    "Sentence",
    "Story",
    "__version__",
    "load_corpus",
    "split_train_val",
    "write_stories",
]

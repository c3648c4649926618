"""Endpoint relatedness: lexical overlap and embedding cosine."""

from __future__ import annotations

import logging

import numpy as np

from ..backends.base import SentenceEmbedder, cosine
from ..corpus import Sentence

log = logging.getLogger(__name__)


def dice_overlap(a: Sentence, b: Sentence) -> float:
    """Dice coefficient 2|A&B| / (|A|+|B|) over normalized token sets."""
    sa, sb = set(a.tokens), set(b.tokens)
    return 2 * len(sa & sb) / (len(sa) + len(sb))


def cosine_relatedness(a: Sentence, b: Sentence, embedder: SentenceEmbedder) -> float:
    va = embedder.embed_sentence(a).vector
    vb = embedder.embed_sentence(b).vector
    if float(np.linalg.norm(va)) == 0.0 or float(np.linalg.norm(vb)) == 0.0:
        log.warning("zero-norm sentence embedding; cosine reported as 0.0")
    return cosine(va, vb)

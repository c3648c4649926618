"""Deterministic stub backends.

These ship in the main package (not test-only) so every pipeline path can
run GPU-free. All stubs are pure functions of their inputs and seed, using
SHA-256 instead of Python's randomized `hash`, so outputs are byte-identical
across processes.
"""

from __future__ import annotations

import hashlib
import random
import re
from typing import Mapping

import numpy as np

from ..corpus import Sentence
from .base import (
    ContractError,
    GenerationParams,
    GenerationRequest,
    SentenceEmbedding,
    TokenEmbedding,
    require_single_marker,
    truncate_at_markers,
)

_WORDS = (
    "amber", "basket", "bridge", "candle", "cedar", "cloud", "copper", "dawn",
    "ember", "fable", "garden", "harbor", "hollow", "island", "jasper", "kettle",
    "lantern", "meadow", "morning", "needle", "orchard", "pebble", "quarry", "river",
    "saddle", "thimble", "umber", "valley", "willow", "yonder", "zephyr", "marble",
)

_TERMINATOR_RE = re.compile(r"[.!?]")


def _stable_int(*parts: object) -> int:
    key = "\x1f".join(str(p) for p in parts)
    return int.from_bytes(hashlib.sha256(key.encode("utf-8")).digest()[:8], "big")


def _stable_rng(*parts: object) -> random.Random:
    return random.Random(_stable_int(*parts))


def gap_index_of_marker(text: str, marker: str) -> int:
    """Number of sentence terminators before the marker.

    For masked renderings produced by this package that equals the
    insert-before index of the gap being scored.
    """
    require_single_marker(text, marker)
    prefix = text[: text.index(marker)]
    return len(_TERMINATOR_RE.findall(prefix))


class EchoTextGenerator:
    """Pseudo-text completion: a fixed pure function of (prompt, seed)."""

    concurrency_safe = True

    def __init__(self, seed: int = 0):
        self.seed = seed
        self.name = f"echo-text(seed={seed})"

    def generate(self, request: GenerationRequest) -> str:
        seed = request.seed if request.seed is not None else self.seed
        rng = _stable_rng("text", request.prompt, seed)
        count = max(1, min(request.max_new_tokens, 10))
        words = [rng.choice(_WORDS) for _ in range(count)]
        text = " ".join(words).capitalize() + "."
        return truncate_at_markers(text, request.stop_markers)


class EchoChatGenerator:
    """Pseudo chat completion; emits roughly one sentence per 16 tokens of budget."""

    concurrency_safe = True

    def __init__(self, seed: int = 0):
        self.seed = seed
        self.name = f"echo-chat(seed={seed})"

    def chat(self, system: str, user: str, params: GenerationParams) -> str:
        seed = params.seed if params.seed is not None else self.seed
        rng = _stable_rng("chat", system, user, seed)
        n_sentences = max(1, min(params.max_new_tokens // 16, 80))
        sentences = []
        for _ in range(n_sentences):
            words = [rng.choice(_WORDS) for _ in range(rng.randint(4, 7))]
            sentences.append(" ".join(words).capitalize() + ".")
        return truncate_at_markers(" ".join(sentences), params.stop_markers)


class ScriptedTextGenerator:
    """Canned prompt->completion table; unscripted prompts are an error.

    Records every request in `.calls`, which doubles as a capturing stub for
    prompt-shape assertions.
    """

    concurrency_safe = True

    def __init__(self, script: Mapping[str, str] | None = None, default: str | None = None):
        self.script = dict(script or {})
        self.default = default
        self.calls: list[GenerationRequest] = []
        self.name = "scripted-text"

    def generate(self, request: GenerationRequest) -> str:
        self.calls.append(request)
        if request.prompt in self.script:
            return truncate_at_markers(self.script[request.prompt], request.stop_markers)
        if self.default is not None:
            return truncate_at_markers(self.default, request.stop_markers)
        raise ContractError(f"unscripted prompt: {request.prompt!r}")


class ScriptedChatGenerator:
    """Canned (system, user)->answer table with call capture."""

    concurrency_safe = True

    def __init__(self, script: Mapping[tuple[str, str], str] | None = None, default: str | None = None):
        self.script = dict(script or {})
        self.default = default
        self.calls: list[tuple[str, str, GenerationParams]] = []
        self.name = "scripted-chat"

    def chat(self, system: str, user: str, params: GenerationParams) -> str:
        self.calls.append((system, user, params))
        key = (system, user)
        if key in self.script:
            return truncate_at_markers(self.script[key], params.stop_markers)
        if self.default is not None:
            return truncate_at_markers(self.default, params.stop_markers)
        raise ContractError(f"unscripted prompt: system={system!r} user={user!r}")


class HashTokenEmbedder:
    """Token -> two-hot unit-direction vector derived from SHA-256.

    Equal tokens get identical vectors; distinct tokens are orthogonal unless
    a hash coordinate collides (cosine 0.5 on a single collision, which stays
    below the 0.7 extraction threshold; both coordinates colliding is a
    ~2^-48 event per pair).
    """

    concurrency_safe = True

    def __init__(self, dim: int = 4096):
        if dim < 4 or dim % 2:
            raise ValueError("dim must be an even integer >= 4")
        self.dim = dim
        self.name = f"hash-token-embedder(dim={dim})"

    def vector_for(self, token: str) -> np.ndarray:
        half = self.dim // 2
        digest = hashlib.sha256(token.encode("utf-8")).digest()
        vec = np.zeros(self.dim)
        vec[int.from_bytes(digest[:8], "big") % half] = 1.0
        vec[half + int.from_bytes(digest[8:16], "big") % half] = 1.0
        return vec

    def embed_tokens(self, sentence: Sentence) -> list[TokenEmbedding]:
        return [TokenEmbedding(token, self.vector_for(token)) for token in sentence.tokens]


class HashSentenceEmbedder:
    """Sentence vector = mean of its token vectors from the hash embedder."""

    concurrency_safe = True

    def __init__(self, dim: int = 4096):
        self._tokens = HashTokenEmbedder(dim=dim)
        self.dim = dim
        self.name = f"hash-sentence-embedder(dim={dim})"

    def embed_sentence(self, sentence: Sentence) -> SentenceEmbedding:
        vectors = [emb.vector for emb in self._tokens.embed_tokens(sentence)]
        return SentenceEmbedding(np.mean(vectors, axis=0))


class HashPositionScorer:
    """Probability as a pure hash of the masked text; spread over [0, 1]."""

    concurrency_safe = True

    def __init__(self, mask_marker: str = "<mask>", seed: int = 0):
        self.mask_marker = mask_marker
        self.seed = seed
        self.name = f"hash-position(seed={seed})"

    def score_position(self, masked_story_text: str) -> float:
        require_single_marker(masked_story_text, self.mask_marker)
        return (_stable_int("position", masked_story_text, self.seed) % 10**6) / (10**6 - 1)


class MonotonePositionScorer:
    """Probability = gap index / 10 (capped at 1): the last gap wins argmax."""

    concurrency_safe = True

    def __init__(self, mask_marker: str = "<mask>"):
        self.mask_marker = mask_marker
        self.name = "monotone-position"

    def score_position(self, masked_story_text: str) -> float:
        return min(1.0, gap_index_of_marker(masked_story_text, self.mask_marker) / 10)


class ScriptedPositionScorer:
    """Scores keyed by the gap (insert-before) index of the mask marker."""

    concurrency_safe = True

    def __init__(self, scores: Mapping[int, float], mask_marker: str = "<mask>"):
        self.scores = dict(scores)
        self.mask_marker = mask_marker
        self.name = "scripted-position"

    def score_position(self, masked_story_text: str) -> float:
        index = gap_index_of_marker(masked_story_text, self.mask_marker)
        if index not in self.scores:
            raise ContractError(f"unscripted gap index: {index}")
        return self.scores[index]


class ConstantPositionScorer:
    concurrency_safe = True

    def __init__(self, probability: float = 0.5, mask_marker: str = "<mask>"):
        if not 0 <= probability <= 1:
            raise ValueError("probability must be in [0, 1]")
        self.probability = probability
        self.mask_marker = mask_marker
        self.name = f"constant-position(p={probability})"

    def score_position(self, masked_story_text: str) -> float:
        require_single_marker(masked_story_text, self.mask_marker)
        return self.probability

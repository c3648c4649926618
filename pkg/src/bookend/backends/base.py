"""The five model contracts the pipeline depends on, plus the error taxonomy.

Implementations are plugins: anything satisfying these protocols can drive
the pipeline. The two generation paths (fine-tuned text generators vs chat
models) deliberately share nothing beyond the request parameters.
"""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass
from typing import Protocol, runtime_checkable

import numpy as np

from ..corpus import Sentence


class BackendError(Exception):
    """Base class for all backend failures."""


class TransportError(BackendError):
    """The backend could not be reached or answered out of protocol."""


class ContractError(BackendError):
    """The caller violated a backend contract (bad request, unscripted prompt)."""


class GenerationError(BackendError):
    """The backend answered but produced unusable output."""


@dataclass(frozen=True)
class GenerationParams:
    """Inference parameters shared by text and chat generation.

    Defaults to greedy decoding (temperature 0) for reproducibility.
    """

    max_new_tokens: int = 64
    temperature: float = 0.0
    stop_markers: tuple[str, ...] = ()
    seed: int | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "stop_markers", tuple(self.stop_markers))
        if self.max_new_tokens < 1:
            raise ContractError(f"max_new_tokens must be >= 1, got {self.max_new_tokens}")
        if self.temperature < 0:
            raise ContractError(f"temperature must be >= 0, got {self.temperature}")


@dataclass(frozen=True)
class GenerationRequest(GenerationParams):
    prompt: str = ""

    def __post_init__(self) -> None:
        super().__post_init__()
        if not self.prompt:
            raise ContractError("prompt must be non-empty")

    @classmethod
    def from_params(cls, prompt: str, params: GenerationParams | None = None) -> "GenerationRequest":
        params = params or GenerationParams()
        return cls(
            prompt=prompt,
            max_new_tokens=params.max_new_tokens,
            temperature=params.temperature,
            stop_markers=params.stop_markers,
            seed=params.seed,
        )


@dataclass(frozen=True, eq=False)
class TokenEmbedding:
    token: str
    vector: np.ndarray


@dataclass(frozen=True, eq=False)
class SentenceEmbedding:
    vector: np.ndarray


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    """Cosine similarity; zero-norm vectors yield 0.0 rather than NaN."""
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        return 0.0
    return float(np.dot(u, v) / (nu * nv))


def truncate_at_markers(text: str, stop_markers: tuple[str, ...]) -> str:
    """Cut text at the first occurrence of any stop marker."""
    for marker in stop_markers:
        idx = text.find(marker)
        if idx >= 0:
            text = text[:idx]
    return text


def require_single_marker(text: str, marker: str) -> None:
    count = text.count(marker)
    if count != 1:
        raise ContractError(f"expected exactly one {marker!r} in text, found {count}")


@runtime_checkable
class TextGenerator(Protocol):
    """Causal text completion; returns the completion only, never the prompt."""

    def generate(self, request: GenerationRequest) -> str: ...


@runtime_checkable
class ChatGenerator(Protocol):
    """System+user chat completion for instruction-tuned backends."""

    def chat(self, system: str, user: str, params: GenerationParams) -> str: ...


@runtime_checkable
class TokenEmbedder(Protocol):
    """One embedding per word token, order preserving."""

    def embed_tokens(self, sentence: Sentence) -> list[TokenEmbedding]: ...


@runtime_checkable
class SentenceEmbedder(Protocol):
    def embed_sentence(self, sentence: Sentence) -> SentenceEmbedding: ...


@runtime_checkable
class PositionScorer(Protocol):
    """Probability that a sentence is missing at the (single) mask marker."""

    def score_position(self, masked_story_text: str) -> float: ...


@dataclass
class BackendSuite:
    """The pluggable model bundle one pipeline run is wired to."""

    text: TextGenerator
    chat: ChatGenerator
    tokens: TokenEmbedder
    sentences: SentenceEmbedder
    positions: PositionScorer

    def describe(self) -> dict[str, str]:
        return {
            slot: getattr(backend, "name", type(backend).__name__)
            for slot, backend in (
                ("text", self.text),
                ("chat", self.chat),
                ("tokens", self.tokens),
                ("sentences", self.sentences),
                ("positions", self.positions),
            )
        }

    @property
    def concurrency_safe(self) -> bool:
        # Backends that do not declare safety are treated as single-flight.
        return all(
            getattr(backend, "concurrency_safe", False)
            for backend in (self.text, self.chat, self.tokens, self.sentences, self.positions)
        )


class RateLimiter:
    """Spaces out calls to at most `per_second` across threads."""

    def __init__(self, per_second: float):
        if per_second <= 0:
            raise ValueError("per_second must be positive")
        self._interval = 1.0 / per_second
        self._lock = threading.Lock()
        self._next_at = 0.0

    def wait(self) -> None:
        with self._lock:
            now = time.monotonic()
            scheduled = max(now, self._next_at)
            self._next_at = scheduled + self._interval
        delay = scheduled - now
        if delay > 0:
            time.sleep(delay)


class _RateLimitedBackend:
    _CONTRACT_METHODS = ("generate", "chat", "embed_tokens", "embed_sentence", "score_position")

    def __init__(self, inner, limiter: RateLimiter):
        self._inner = inner
        self._limiter = limiter
        self.name = getattr(inner, "name", type(inner).__name__)
        self.concurrency_safe = getattr(inner, "concurrency_safe", False)

    def __getattr__(self, attr):
        value = getattr(self._inner, attr)
        if attr in self._CONTRACT_METHODS and callable(value):

            def limited(*args, **kwargs):
                self._limiter.wait()
                return value(*args, **kwargs)

            return limited
        return value


def rate_limited(suite: BackendSuite, per_second: float) -> BackendSuite:
    """The same suite behind one shared request-rate cap."""
    limiter = RateLimiter(per_second)
    return BackendSuite(
        text=_RateLimitedBackend(suite.text, limiter),
        chat=_RateLimitedBackend(suite.chat, limiter),
        tokens=_RateLimitedBackend(suite.tokens, limiter),
        sentences=_RateLimitedBackend(suite.sentences, limiter),
        positions=_RateLimitedBackend(suite.positions, limiter),
    )

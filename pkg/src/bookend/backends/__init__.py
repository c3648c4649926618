"""Pluggable model backends: contracts, deterministic stubs, HTTP adapter."""

from __future__ import annotations

from .base import (
    BackendError,
    BackendSuite,
    ChatGenerator,
    ContractError,
    GenerationError,
    GenerationParams,
    GenerationRequest,
    PositionScorer,
    RateLimiter,
    SentenceEmbedder,
    SentenceEmbedding,
    TextGenerator,
    TokenEmbedder,
    TokenEmbedding,
    TransportError,
    cosine,
    rate_limited,
)
from .remote import RemoteBackend
from .stubs import (
    ConstantPositionScorer,
    EchoChatGenerator,
    EchoTextGenerator,
    HashPositionScorer,
    HashSentenceEmbedder,
    HashTokenEmbedder,
    MonotonePositionScorer,
    ScriptedChatGenerator,
    ScriptedPositionScorer,
    ScriptedTextGenerator,
)

__all__ = [
    "BackendError",
    "BackendSuite",
    "ChatGenerator",
    "ConstantPositionScorer",
    "ContractError",
    "EchoChatGenerator",
    "EchoTextGenerator",
    "GenerationError",
    "GenerationParams",
    "GenerationRequest",
    "HashPositionScorer",
    "HashSentenceEmbedder",
    "HashTokenEmbedder",
    "MonotonePositionScorer",
    "PositionScorer",
    "RateLimiter",
    "RemoteBackend",
    "ScriptedChatGenerator",
    "ScriptedPositionScorer",
    "ScriptedTextGenerator",
    "SentenceEmbedder",
    "SentenceEmbedding",
    "TextGenerator",
    "TokenEmbedder",
    "TokenEmbedding",
    "TransportError",
    "cosine",
    "rate_limited",
    "remote_suite",
    "stub_suite",
]


def stub_suite(seed: int = 0, mask_marker: str = "<mask>", dim: int = 4096) -> BackendSuite:
    """The all-stub bundle used for tests, CI, and desk-scale runs."""
    return BackendSuite(
        text=EchoTextGenerator(seed=seed),
        chat=EchoChatGenerator(seed=seed),
        tokens=HashTokenEmbedder(dim=dim),
        sentences=HashSentenceEmbedder(dim=dim),
        positions=HashPositionScorer(mask_marker=mask_marker, seed=seed),
    )


def remote_suite(base_url: str, mask_marker: str = "<mask>", timeout: float = 60.0) -> BackendSuite:
    """Wire every contract to one JSON-over-HTTP model server."""
    backend = RemoteBackend(base_url, mask_marker=mask_marker, timeout=timeout)
    return BackendSuite(text=backend, chat=backend, tokens=backend, sentences=backend, positions=backend)

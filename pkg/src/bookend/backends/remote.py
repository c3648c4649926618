"""HTTP adapter so real model servers can be attached without code changes.

The wire format mirrors the generation request, one JSON object per call:

    POST {base}/generate        {prompt, max_new_tokens, temperature, stop_markers, seed} -> {text}
    POST {base}/chat            {system, user, max_new_tokens, ...}                       -> {text}
    POST {base}/embed-tokens    {tokens: [...]}                                           -> {vectors: [[...], ...]}
    POST {base}/embed-sentence  {text}                                                    -> {vector: [...]}
    POST {base}/score-position  {text, mask_marker}                                       -> {probability}

4xx responses surface as contract errors, 5xx and connection failures as
transport errors.
"""

from __future__ import annotations

import numpy as np

try:
    import httpx
except ImportError:  # pragma: no cover - declared dependency
    httpx = None

from ..corpus import Sentence
from .base import (
    ContractError,
    GenerationParams,
    GenerationRequest,
    SentenceEmbedding,
    TokenEmbedding,
    TransportError,
    require_single_marker,
    truncate_at_markers,
)


class RemoteBackend:
    """One HTTP client implementing all five backend contracts."""

    concurrency_safe = True

    def __init__(self, base_url: str, mask_marker: str = "<mask>", timeout: float = 60.0, client=None):
        if httpx is None:  # pragma: no cover
            raise RuntimeError("httpx is required for remote backends")
        self.base_url = base_url.rstrip("/")
        self.mask_marker = mask_marker
        self.name = f"remote({self.base_url})"
        self._client = client or httpx.Client(timeout=timeout)

    def _post(self, path: str, payload: dict) -> dict:
        url = f"{self.base_url}{path}"
        try:
            response = self._client.post(url, json=payload)
        except httpx.HTTPError as exc:
            raise TransportError(f"backend unreachable at {url}: {exc}") from exc
        if 400 <= response.status_code < 500:
            raise ContractError(f"{url} rejected the request ({response.status_code}): {response.text}")
        if response.status_code != 200:
            raise TransportError(f"{url} answered {response.status_code}: {response.text}")
        try:
            body = response.json()
        except ValueError as exc:
            raise TransportError(f"{url} returned non-JSON body") from exc
        if not isinstance(body, dict):
            raise TransportError(f"{url} returned a non-object body")
        return body

    def generate(self, request: GenerationRequest) -> str:
        body = self._post(
            "/generate",
            {
                "prompt": request.prompt,
                "max_new_tokens": request.max_new_tokens,
                "temperature": request.temperature,
                "stop_markers": list(request.stop_markers),
                "seed": request.seed,
            },
        )
        if "text" not in body:
            raise TransportError("/generate response missing 'text'")
        # Defensive: the contract promises marker truncation either way.
        return truncate_at_markers(str(body["text"]), request.stop_markers)

    def chat(self, system: str, user: str, params: GenerationParams) -> str:
        body = self._post(
            "/chat",
            {
                "system": system,
                "user": user,
                "max_new_tokens": params.max_new_tokens,
                "temperature": params.temperature,
                "stop_markers": list(params.stop_markers),
                "seed": params.seed,
            },
        )
        if "text" not in body:
            raise TransportError("/chat response missing 'text'")
        return truncate_at_markers(str(body["text"]), params.stop_markers)

    def embed_tokens(self, sentence: Sentence) -> list[TokenEmbedding]:
        body = self._post("/embed-tokens", {"tokens": list(sentence.tokens)})
        vectors = body.get("vectors")
        if not isinstance(vectors, list) or len(vectors) != len(sentence.tokens):
            raise TransportError("/embed-tokens response must hold one vector per token")
        return [
            TokenEmbedding(token, np.asarray(vec, dtype=float))
            for token, vec in zip(sentence.tokens, vectors)
        ]

    def embed_sentence(self, sentence: Sentence) -> SentenceEmbedding:
        body = self._post("/embed-sentence", {"text": sentence.text})
        if "vector" not in body:
            raise TransportError("/embed-sentence response missing 'vector'")
        return SentenceEmbedding(np.asarray(body["vector"], dtype=float))

    def score_position(self, masked_story_text: str) -> float:
        require_single_marker(masked_story_text, self.mask_marker)
        body = self._post("/score-position", {"text": masked_story_text, "mask_marker": self.mask_marker})
        if "probability" not in body:
            raise TransportError("/score-position response missing 'probability'")
        probability = float(body["probability"])
        if not 0 <= probability <= 1:
            raise TransportError(f"/score-position probability out of range: {probability}")
        return probability

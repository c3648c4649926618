"""Endpoint generation for the fine-tuned-LM scheme.

Two steps: a phrase generator proposes relatable tokens from the start, then
a stop generator writes the closing sentence conditioned on the start plus
that list. The two may be the same model handle or two checkpoints.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

from .backends.base import GenerationError, GenerationParams, GenerationRequest, TextGenerator
from .config import Markers
from .corpus import Sentence, split_sentences
from .sampling import PhraseList

log = logging.getLogger(__name__)

SOURCE_GENERATED = "generated"
SOURCE_USER_EDITED = "user-edited"

_DEFAULT_MARKERS = Markers()


@dataclass(frozen=True)
class EndpointResult:
    start: Sentence
    phrase_list: PhraseList
    stop: Sentence
    phrase_list_source: str = SOURCE_GENERATED


def phrase_list_prompt(start: Sentence, markers: Markers = _DEFAULT_MARKERS) -> str:
    return f"{start.text} {markers.phrase_list}"


def stop_prompt(start: Sentence, phrase_list: PhraseList, markers: Markers = _DEFAULT_MARKERS) -> str:
    """Start text, then the comma-joined list between its markers.

    Every phrase-list token appears verbatim so an edited list steers the
    stop generator directly.
    """
    parts = [start.text, markers.phrase_list]
    if len(phrase_list):
        parts.append(phrase_list.joined())
    parts.append(markers.stop)
    return " ".join(parts)


def parse_phrase_tokens(raw: str) -> list[str]:
    """Parse generator output into tokens: comma-separated, else whitespace."""
    raw = raw.strip()
    if not raw:
        return []
    items = raw.split(",") if "," in raw else raw.split()
    tokens = []
    for item in items:
        token = item.strip().strip(".;:!?\"'()[]")
        if token:
            tokens.append(token)
    return tokens


def first_sentence(raw: str) -> Sentence | None:
    """First well-formed sentence of a generation, or None."""
    for piece in split_sentences(raw):
        try:
            return Sentence(piece)
        except ValueError:
            continue
    return None


def generate_phrase_list(
    start: Sentence,
    generator: TextGenerator,
    markers: Markers = _DEFAULT_MARKERS,
    params: GenerationParams | None = None,
) -> PhraseList:
    """Run the phrase generator and parse its output into an ordered list.

    Unparseable output degrades to an empty list with a warning; an
    interactive session must never abort over a bad phrase list.
    """
    params = params or GenerationParams(max_new_tokens=24)
    # The list ends where the stop-sentence section would begin.
    effective = GenerationParams(
        max_new_tokens=params.max_new_tokens,
        temperature=params.temperature,
        stop_markers=tuple(params.stop_markers) + (markers.stop, "\n"),
        seed=params.seed,
    )
    raw = generator.generate(GenerationRequest.from_params(phrase_list_prompt(start, markers), effective))
    tokens = parse_phrase_tokens(raw)
    if raw.strip() and not tokens:
        log.warning("phrase generator output %r parsed to no tokens; using empty list", raw)
    return PhraseList.dedup(tokens)


def generate_stop(
    start: Sentence,
    phrase_list: PhraseList,
    generator: TextGenerator,
    markers: Markers = _DEFAULT_MARKERS,
    params: GenerationParams | None = None,
) -> Sentence:
    params = params or GenerationParams(max_new_tokens=48)
    request = GenerationRequest.from_params(stop_prompt(start, phrase_list, markers), params)
    raw = generator.generate(request)
    sentence = first_sentence(raw)
    if sentence is None:
        raise GenerationError(f"stop generation failed: no sentence in output {raw!r}")
    return sentence


def generate_endpoints(
    start: Sentence,
    generator: TextGenerator,
    stop_generator: TextGenerator | None = None,
    markers: Markers = _DEFAULT_MARKERS,
    params: GenerationParams | None = None,
) -> EndpointResult:
    """Phrase list then stop; pass `stop_generator` to use a second checkpoint."""
    phrase_list = generate_phrase_list(start, generator, markers, params)
    stop = generate_stop(start, phrase_list, stop_generator or generator, markers, params)
    return EndpointResult(start=start, phrase_list=phrase_list, stop=stop, phrase_list_source=SOURCE_GENERATED)

"""Iterative story infilling: pick the neediest gap, generate a sentence there.

Each iteration scores every gap between consecutive sentences with the
position scorer, inserts one generated sentence at the argmax gap, and
repeats until the story reaches its target length. Endpoints are never
touched.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .backends.base import (
    BackendError,
    GenerationError,
    GenerationParams,
    GenerationRequest,
    PositionScorer,
    TextGenerator,
)
from .config import Markers
from .corpus import Sentence, Story
from .endpoints import first_sentence

_DEFAULT_MARKERS = Markers()


@dataclass(frozen=True)
class GapPosition:
    """Insertion point between sentences: new sentence goes before this index."""

    insert_before: int

    def __post_init__(self) -> None:
        if self.insert_before < 1:
            raise ValueError("a gap never precedes the start sentence")


@dataclass(frozen=True)
class InfillStep:
    gap: GapPosition
    sentence: Sentence
    scores: tuple[tuple[int, float], ...]

    def to_dict(self) -> dict:
        return {
            "insert_before": self.gap.insert_before,
            "sentence": self.sentence.text,
            "scores": [{"insert_before": g, "probability": p} for g, p in self.scores],
        }


@dataclass
class InfillState:
    """A partially built story plus its target length and insertion trace."""

    sentences: list[Sentence]
    target_length: int
    trace: list[InfillStep] = field(default_factory=list)

    @classmethod
    def begin(cls, start: Sentence, stop: Sentence, target_length: int) -> "InfillState":
        if target_length < 2:
            raise ValueError(f"target length must be >= 2, got {target_length}")
        return cls(sentences=[start, stop], target_length=target_length)

    @property
    def complete(self) -> bool:
        return len(self.sentences) >= self.target_length

    def apply(self, gap: GapPosition, sentence: Sentence, scores: tuple[tuple[int, float], ...]) -> InfillStep:
        if self.complete:
            raise ValueError("story already has its target length")
        if not 1 <= gap.insert_before <= len(self.sentences) - 1:
            raise ValueError(f"gap {gap.insert_before} out of range for {len(self.sentences)} sentences")
        self.sentences.insert(gap.insert_before, sentence)
        step = InfillStep(gap=gap, sentence=sentence, scores=scores)
        self.trace.append(step)
        return step


class InfillError(BackendError):
    """An infilling run aborted; carries the partial trace for diagnosis."""

    def __init__(self, message: str, trace: list[InfillStep], sentences: list[Sentence]):
        super().__init__(message)
        self.trace = list(trace)
        self.sentences = list(sentences)


def candidate_gaps(state: InfillState) -> list[GapPosition]:
    """All gaps between adjacent sentences, ascending. Errors when complete."""
    if state.complete:
        raise ValueError("story already complete; no gaps to fill")
    return [GapPosition(i) for i in range(1, len(state.sentences))]


def render_masked(sentences: list[Sentence], gap: GapPosition, mask_marker: str) -> str:
    """Masked text for scoring one gap; same shape as classifier training rows."""
    texts = [s.text for s in sentences]
    g = gap.insert_before
    return " ".join(texts[:g] + [mask_marker] + texts[g:])


def score_gaps(
    state: InfillState, scorer: PositionScorer, markers: Markers = _DEFAULT_MARKERS
) -> list[tuple[GapPosition, float]]:
    scored = []
    for gap in candidate_gaps(state):
        try:
            probability = scorer.score_position(render_masked(state.sentences, gap, markers.mask))
        except BackendError as exc:
            raise InfillError(
                f"position scoring failed at gap {gap.insert_before}: {exc}", state.trace, state.sentences
            ) from exc
        scored.append((gap, probability))
    return scored


def select_gap(state: InfillState, scorer: PositionScorer, markers: Markers = _DEFAULT_MARKERS) -> GapPosition:
    """Argmax-probability gap; ties break toward the smallest index."""
    scored = score_gaps(state, scorer, markers)
    return max(scored, key=lambda pair: pair[1])[0]


def infill_prompt(sentences: list[Sentence], gap: GapPosition, markers: Markers = _DEFAULT_MARKERS) -> str:
    texts = [s.text for s in sentences]
    g = gap.insert_before
    return " ".join(texts[:g] + [markers.mask] + texts[g:] + [markers.sep])


def generate_infill(
    state: InfillState,
    gap: GapPosition,
    generator: TextGenerator,
    markers: Markers = _DEFAULT_MARKERS,
    params: GenerationParams | None = None,
) -> Sentence:
    params = params or GenerationParams(max_new_tokens=48)
    request = GenerationRequest.from_params(infill_prompt(state.sentences, gap, markers), params)
    raw = generator.generate(request)
    sentence = first_sentence(raw)
    if sentence is None:
        raise GenerationError(f"infill generation produced no sentence: {raw!r}")
    return sentence


def infill_once(
    state: InfillState,
    scorer: PositionScorer,
    generator: TextGenerator,
    markers: Markers = _DEFAULT_MARKERS,
    params: GenerationParams | None = None,
) -> InfillStep:
    """One iteration: score all gaps, pick the argmax, insert one sentence."""
    scored = score_gaps(state, scorer, markers)
    # max() keeps the first of equal scores; gaps ascend, so ties break low.
    gap = max(scored, key=lambda pair: pair[1])[0]
    try:
        sentence = generate_infill(state, gap, generator, markers, params)
    except BackendError as exc:
        raise InfillError(
            f"infill generation failed at gap {gap.insert_before}: {exc}", state.trace, state.sentences
        ) from exc
    return state.apply(gap, sentence, tuple((g.insert_before, p) for g, p in scored))


def infill_story(
    start: Sentence,
    stop: Sentence,
    n: int,
    scorer: PositionScorer,
    generator: TextGenerator,
    markers: Markers = _DEFAULT_MARKERS,
    params: GenerationParams | None = None,
    story_id: str | None = None,
) -> tuple[Story, list[InfillStep]]:
    """Grow [start, stop] to n sentences; n=2 makes zero backend calls."""
    state = InfillState.begin(start, stop, n)
    while not state.complete:
        infill_once(state, scorer, generator, markers, params)
    return Story(tuple(state.sentences), id=story_id), state.trace

"""Chat-model story pipeline: six endpoint prompting methods, one-shot
infilling, response cleaning, and assembly.

Method ids select how the closing sentence is asked for:

    1  phrase list from the start, then a stop using it (two prompts)
    2  directly ask for a related closing sentence
    3  salient narrative question, then a stop answering it (two prompts)
    4  matching ending: same character / action / location
    5  stop that entails the start
    6  stop entailed by the start
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .backends.base import ChatGenerator, GenerationError, GenerationParams
from .corpus import Sentence, Story, split_sentences
from .sampling import PhraseList
from .endpoints import parse_phrase_tokens

METHOD_IDS = (1, 2, 3, 4, 5, 6)
TWO_STAGE_METHODS = (1, 3)

SYSTEM_PROMPT = (
    "You are a talented writer. Generate sentences for a well-written narrative. "
    "If you have ethical concerns, resolve them in the story."
)
SYSTEM_PROMPT_STRICT = (
    "You are a talented writer. For each prompt, only generate the sentences for a well-written narrative."
)

STAGE_1_PROMPTS = {
    1: (
        "Here is the first sentence of a narrative: {start}. "
        "What are the most salient words or phrases? Give me a list, where each item is separated by a comma."
    ),
    3: (
        "Here is the first sentence of a narrative: {start}. "
        "What is the most salient question to propel the narrative forward?"
    ),
}

STAGE_2_PROMPTS = {
    1: (
        "Here is the first sentence and its salient words/phrases: {start}, {intermediate}. "
        "Using this first sentence and the list of salient words/phrases, give one related closing sentence"
    ),
    3: (
        "Here is the first sentence and relevant question for a narrative: {start}, {intermediate}. "
        "Give me ONE closing sentence that answers the most salient question without introducing new questions."
    ),
}

SINGLE_STAGE_PROMPTS = {
    2: (
        "Here is the first sentence of a narrative: {start}. "
        "Please give me a closing sentence which is related to the first sentence."
    ),
    4: (
        "Here is the first sentence of a narrative: {start}. "
        "Please give me a closing sentence that has the same character and/or same related action and/or location."
    ),
    5: (
        "Here is the first sentence of a narrative: {start}. "
        "Please give me a closing sentence that entails the first sentence."
    ),
    6: (
        "Here is the first sentence of a narrative: {start}. "
        "Please give me a closing sentence that is the entailment of the first sentence."
    ),
}

INFILL_PROMPT = (
    "Here is the first sentence of a narrative: {start} and here is the last sentence: {stop}. "
    "What happens between these sentences? Please give me {count} consecutive intermediate sentences."
)

LONG_GENERATION_PROMPT = (
    "Here is the first sentence of a narrative: {start} and here is the last sentence: {stop}. "
    "What happens between these sentences? Please give the complete story."
)

BASELINE_PROMPT = "Complete the story in {count} sentences: {start}."

RELATED_BASELINE_PROMPT = (
    "Here is the first sentence of a narrative: {start}. Please give me the next {count} sentences. "
    "Make sure that the last sentence is related to the first sentence."
)

_NUMBER_WORDS = ("ZERO", "ONE", "TWO", "THREE", "FOUR", "FIVE", "SIX", "SEVEN", "EIGHT", "NINE", "TEN")


def number_word(count: int) -> str:
    """Upper-case number word for prompt templates; digits beyond ten."""
    if 0 <= count <= 10:
        return _NUMBER_WORDS[count]
    return str(count)


@dataclass(frozen=True)
class PromptMethod:
    id: int

    def __post_init__(self) -> None:
        if self.id not in METHOD_IDS:
            raise ValueError(f"method id must be one of {METHOD_IDS}, got {self.id}")

    @property
    def two_stage(self) -> bool:
        return self.id in TWO_STAGE_METHODS


@dataclass(frozen=True)
class MethodIntermediates:
    phrase_list: PhraseList | None = None
    question: str | None = None

    def to_dict(self) -> dict:
        return {
            "phrase_list": list(self.phrase_list) if self.phrase_list is not None else None,
            "question": self.question,
        }


@dataclass(frozen=True)
class ChatExchange:
    system: str
    user: str
    response: str

    def to_dict(self) -> dict:
        return {"system": self.system, "user": self.user, "response": self.response}


@dataclass(frozen=True)
class PromptTranscript:
    exchanges: tuple[ChatExchange, ...]
    method: PromptMethod | None
    cleaned_story: Story

    def __post_init__(self) -> None:
        if not self.exchanges:
            raise ValueError("a transcript holds at least one exchange")

    def to_dict(self) -> dict:
        return {
            "method": self.method.id if self.method else None,
            "exchanges": [e.to_dict() for e in self.exchanges],
            "story": self.cleaned_story.texts(),
        }


class ChatPipelineError(GenerationError):
    """A chat-path failure; the transcript so far rides along."""

    def __init__(self, message: str, exchanges: Sequence[ChatExchange] = ()):
        super().__init__(message)
        self.exchanges = tuple(exchanges)


def build_endpoint_prompts(
    method: PromptMethod, start: Sentence, intermediate: str | None = None
) -> tuple[str, ...]:
    """Rendered prompt strings for a method: one, or two once the stage-1
    output is available."""
    if method.two_stage:
        stage1 = STAGE_1_PROMPTS[method.id].format(start=start.text)
        if intermediate is None:
            return (stage1,)
        return (stage1, stage2_prompt(method, start, intermediate))
    return (SINGLE_STAGE_PROMPTS[method.id].format(start=start.text),)


def stage2_prompt(method: PromptMethod, start: Sentence, intermediate: str | None) -> str:
    if not method.two_stage:
        raise ValueError(f"method {method.id} has no second stage")
    if intermediate is None:
        raise ValueError(f"method {method.id} stage 2 needs its stage-1 intermediate")
    return STAGE_2_PROMPTS[method.id].format(start=start.text, intermediate=intermediate)


_ROLE_LABEL_RE = re.compile(
    r"^(assistant|system|user|ai|bot|model|response|answer|output)\s*:\s*", re.IGNORECASE
)
_LIST_PREFIX_RE = re.compile(r"^(?:[-*•]+(?:\s+|$)|\(?\d{1,3}[.)](?:\s+|$))")
_QUOTE_PAIRS = {'"': '"', "'": "'", "“": "”", "‘": "’"}


def _strip_wrapping_quotes(line: str) -> str:
    while len(line) >= 2:
        opener = line[0]
        closer = _QUOTE_PAIRS.get(opener)
        if closer and line.endswith(closer) and opener not in line[1:-1]:
            line = line[1:-1].strip()
        else:
            break
    return line


def clean_response(raw: str) -> list[Sentence]:
    """Normalize noisy chat output into bare story sentences.

    Fixed ordered rule list (config.CLEANING_RULES_VERSION): drop lead-in lines
    ending in ':', strip role labels, list numbering and bullets, and
    wrapping quotes, then sentence-split and drop incomplete trailing
    fragments. The pass is repeated until its output stabilizes (one strip
    can expose another), which makes cleaning idempotent by construction;
    every pass only deletes, so this terminates.
    """
    sentences = _clean_pass(raw)
    while True:
        joined = " ".join(s.text for s in sentences)
        again = _clean_pass(joined)
        if [s.text for s in again] == [s.text for s in sentences]:
            return sentences
        sentences = again


def _clean_pass(raw: str) -> list[Sentence]:
    lines = [line.strip() for line in raw.splitlines()]
    lines = [line for line in lines if line]
    while lines and lines[0].endswith(":"):
        lines.pop(0)
    cleaned_lines = []
    for line in lines:
        # To a fixpoint: stripping one layer can expose another (quoted
        # numbering, stacked role labels).
        while True:
            before = line
            while match := _ROLE_LABEL_RE.match(line):
                line = line[match.end() :]
            while match := _LIST_PREFIX_RE.match(line):
                line = line[match.end() :]
            line = _strip_wrapping_quotes(line.strip())
            if line == before:
                break
        if line:
            cleaned_lines.append(line)
    sentences: list[Sentence] = []
    for piece in split_sentences(" ".join(cleaned_lines)):
        piece = _strip_wrapping_quotes(piece)
        if piece.endswith(":"):
            continue
        try:
            sentences.append(Sentence(piece))
        except ValueError:
            continue
    return sentences


def generate_stop_llm(
    method: PromptMethod,
    start: Sentence,
    chat: ChatGenerator,
    params: GenerationParams | None = None,
    system: str = SYSTEM_PROMPT,
) -> tuple[Sentence, MethodIntermediates, list[ChatExchange]]:
    """Run the method's prompt stage(s) and clean the final answer to one stop."""
    params = params or GenerationParams(max_new_tokens=96)
    exchanges: list[ChatExchange] = []
    intermediates = MethodIntermediates()

    if method.two_stage:
        stage1 = build_endpoint_prompts(method, start)[0]
        reply = chat.chat(system, stage1, params)
        exchanges.append(ChatExchange(system, stage1, reply))
        if method.id == 1:
            phrase_list = PhraseList.dedup(parse_phrase_tokens(" ".join(s.text for s in clean_response(reply))))
            intermediates = MethodIntermediates(phrase_list=phrase_list)
            intermediate_text = phrase_list.joined()
        else:
            question = reply.strip()
            intermediates = MethodIntermediates(question=question)
            intermediate_text = question
        final_prompt = stage2_prompt(method, start, intermediate_text)
    else:
        final_prompt = build_endpoint_prompts(method, start)[0]

    reply = chat.chat(system, final_prompt, params)
    exchanges.append(ChatExchange(system, final_prompt, reply))
    cleaned = clean_response(reply)
    if not cleaned:
        raise ChatPipelineError(f"stop generation cleaned to nothing: {reply!r}", exchanges)
    return cleaned[0], intermediates, exchanges


def infill_all_llm(
    start: Sentence,
    stop: Sentence,
    middle_count: int,
    chat: ChatGenerator,
    params: GenerationParams | None = None,
    system: str = SYSTEM_PROMPT,
) -> tuple[list[Sentence], list[ChatExchange]]:
    """One-shot left-to-right infilling of all middle sentences.

    Over-delivery is truncated; under-delivery is an error so failure rates
    stay visible.
    """
    if middle_count < 0:
        raise ValueError("middle_count must be >= 0")
    if middle_count == 0:
        return [], []
    params = params or GenerationParams(max_new_tokens=48 * middle_count + 32)
    prompt = INFILL_PROMPT.format(start=start.text, stop=stop.text, count=number_word(middle_count))
    reply = chat.chat(system, prompt, params)
    exchange = ChatExchange(system, prompt, reply)
    sentences = clean_response(reply)
    if len(sentences) < middle_count:
        raise ChatPipelineError(
            f"incomplete infill: asked for {middle_count} sentences, got {len(sentences)}", [exchange]
        )
    return sentences[:middle_count], [exchange]


def generate_story_llm(
    method: PromptMethod,
    start: Sentence,
    total_length: int,
    chat: ChatGenerator,
    params: GenerationParams | None = None,
    system: str = SYSTEM_PROMPT,
    story_id: str | None = None,
) -> tuple[Story, PromptTranscript]:
    """Endpoints by the chosen method, middles in one shot, assembled story."""
    if total_length < 2:
        raise ValueError(f"total_length must be >= 2, got {total_length}")
    stop, _, exchanges = generate_stop_llm(method, start, chat, params, system)
    middles, infill_exchanges = infill_all_llm(start, stop, total_length - 2, chat, params, system)
    story = Story(tuple([start, *middles, stop]), id=story_id)
    transcript = PromptTranscript(tuple(exchanges + infill_exchanges), method, story)
    return story, transcript


def generate_long_story_llm(
    method: PromptMethod,
    start: Sentence,
    chat: ChatGenerator,
    params: GenerationParams | None = None,
    system: str = SYSTEM_PROMPT,
    story_id: str | None = None,
) -> tuple[Story, PromptTranscript]:
    """Unbounded-length variant: the model decides how much story fits between."""
    stop, _, exchanges = generate_stop_llm(method, start, chat, params, system)
    params = params or GenerationParams(max_new_tokens=1024)
    prompt = LONG_GENERATION_PROMPT.format(start=start.text, stop=stop.text)
    reply = chat.chat(system, prompt, params)
    exchanges = exchanges + [ChatExchange(system, prompt, reply)]
    middles = clean_response(reply)
    story = Story(tuple([start, *middles, stop]), id=story_id)
    return story, PromptTranscript(tuple(exchanges), method, story)


def _completion_story(
    prompt: str,
    start: Sentence,
    n: int,
    chat: ChatGenerator,
    params: GenerationParams | None,
    system: str,
    story_id: str | None,
) -> tuple[Story, PromptTranscript]:
    params = params or GenerationParams(max_new_tokens=48 * n)
    reply = chat.chat(system, prompt, params)
    exchange = ChatExchange(system, prompt, reply)
    sentences = clean_response(reply)
    if len(sentences) < n - 1:
        raise ChatPipelineError(
            f"incomplete completion: asked for {n - 1} sentences, got {len(sentences)}", [exchange]
        )
    story = Story(tuple([start, *sentences[: n - 1]]), id=story_id)
    return story, PromptTranscript((exchange,), None, story)


def baseline_story_llm(
    start: Sentence,
    n: int,
    chat: ChatGenerator,
    params: GenerationParams | None = None,
    system: str = SYSTEM_PROMPT,
    story_id: str | None = None,
) -> tuple[Story, PromptTranscript]:
    """Plain left-to-right completion with no relatedness instruction."""
    if n < 2:
        raise ValueError(f"n must be >= 2, got {n}")
    prompt = BASELINE_PROMPT.format(count=number_word(n - 1), start=start.text)
    return _completion_story(prompt, start, n, chat, params, system, story_id)


def related_baseline_story_llm(
    start: Sentence,
    n: int,
    chat: ChatGenerator,
    params: GenerationParams | None = None,
    system: str = SYSTEM_PROMPT,
    story_id: str | None = None,
) -> tuple[Story, PromptTranscript]:
    """Single-prompt variant that only asks for a related last sentence."""
    if n < 2:
        raise ValueError(f"n must be >= 2, got {n}")
    prompt = RELATED_BASELINE_PROMPT.format(count=number_word(n - 1), start=start.text)
    return _completion_story(prompt, start, n, chat, params, system, story_id)


def scripted_table_from_transcript(transcript: PromptTranscript) -> dict[tuple[str, str], str]:
    """Replay helper: the (system, user) -> response table a stored transcript implies."""
    return {(e.system, e.user): e.response for e in transcript.exchanges}


def write_transcripts_jsonl(path: str | Path, transcripts: Iterable[PromptTranscript]) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for transcript in transcripts:
            fh.write(json.dumps(transcript.to_dict(), ensure_ascii=False) + "\n")

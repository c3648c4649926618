"""Story corpus primitives: sentences, stories, loading, splitting, serializing.

All other modules consume :class:`Story` values; files are only touched here.
"""

from __future__ import annotations

import csv
import json
import math
import random
import string
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Sequence

FIVE_SENTENCE_CSV = "five-sentence-csv"
JSONL = "jsonl"
STORY_FORMATS = (FIVE_SENTENCE_CSV, JSONL)

_CSV_COLUMNS = ("id", "title", "sentence1", "sentence2", "sentence3", "sentence4", "sentence5")

# ASCII punctuation plus the curly quotes that show up in prose corpora.
_PUNCT = string.punctuation + "‘’“”…"

_TERMINATORS = ".!?"
_CLOSERS = "\"')]’”"


class CorpusFormatError(ValueError):
    """A story file did not parse under its declared format."""


@lru_cache(maxsize=65536)
def tokenize(text: str) -> tuple[str, ...]:
    """Lowercased word tokens: whitespace split, edge punctuation stripped.

    The single tokenizer shared by metrics and sample construction, so
    overlap/diversity numbers stay comparable across runs.
    """
    out = []
    for raw in text.lower().split():
        tok = raw.strip(_PUNCT)
        if tok:
            out.append(tok)
    return tuple(out)


def split_sentences(text: str) -> list[str]:
    """Split prose into sentences on ./!/? keeping the terminator.

    Closing quotes and brackets stay attached to their sentence. A trailing
    fragment without a terminator is kept as its own sentence so no text is
    silently dropped.
    """
    collapsed = " ".join(text.split())
    if not collapsed:
        return []
    sentences: list[str] = []
    buf: list[str] = []
    i, n = 0, len(collapsed)
    while i < n:
        ch = collapsed[i]
        buf.append(ch)
        if ch in _TERMINATORS:
            j = i + 1
            while j < n and collapsed[j] in _TERMINATORS:
                buf.append(collapsed[j])
                j += 1
            while j < n and collapsed[j] in _CLOSERS:
                buf.append(collapsed[j])
                j += 1
            if j >= n or collapsed[j] == " ":
                piece = "".join(buf).strip()
                if piece:
                    sentences.append(piece)
                buf = []
                j += 1
            i = j
        else:
            i += 1
    tail = "".join(buf).strip()
    if tail:
        sentences.append(tail)
    return sentences


@dataclass(frozen=True)
class Sentence:
    """One sentence of a story. Text is trimmed and must contain a word token."""

    text: str

    def __post_init__(self) -> None:
        trimmed = " ".join(self.text.split())
        object.__setattr__(self, "text", trimmed)
        if not tokenize(trimmed):
            raise ValueError(f"sentence has no word tokens: {self.text!r}")

    @property
    def tokens(self) -> tuple[str, ...]:
        return tokenize(self.text)

    def __str__(self) -> str:
        return self.text


@dataclass(frozen=True)
class Story:
    """An ordered sentence sequence with designated start/stop endpoints."""

    sentences: tuple[Sentence, ...]
    id: str | None = None
    title: str | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "sentences", tuple(self.sentences))
        if len(self.sentences) < 2:
            raise ValueError("a story needs at least two sentences (both endpoints)")

    @classmethod
    def from_texts(cls, texts: Iterable[str], id: str | None = None, title: str | None = None) -> "Story":
        return cls(tuple(Sentence(t) for t in texts), id=id, title=title)

    def start(self) -> Sentence:
        return self.sentences[0]

    def stop(self) -> Sentence:
        return self.sentences[-1]

    def text(self) -> str:
        return " ".join(s.text for s in self.sentences)

    def texts(self) -> list[str]:
        return [s.text for s in self.sentences]

    def __len__(self) -> int:
        return len(self.sentences)


@dataclass(frozen=True)
class CorpusSplit:
    train: tuple[Story, ...]
    validation: tuple[Story, ...]
    seed: int


def load_corpus(path: str | Path, format: str = FIVE_SENTENCE_CSV) -> list[Story]:
    """Load stories from a CSV (fixed five sentences) or JSON-lines file."""
    path = Path(path)
    if format == FIVE_SENTENCE_CSV:
        return _load_csv(path)
    if format == JSONL:
        return _load_jsonl(path)
    raise ValueError(f"unknown corpus format: {format!r} (expected one of {STORY_FORMATS})")


def _load_csv(path: Path) -> list[Story]:
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise CorpusFormatError(f"{path}: empty file (missing header row)")
        missing = [c for c in _CSV_COLUMNS if c not in reader.fieldnames]
        if missing:
            raise CorpusFormatError(f"{path}: header is missing columns {missing}")
        stories = []
        for idx, row in enumerate(reader, start=1):
            try:
                sentences = tuple(Sentence(row[f"sentence{i}"] or "") for i in range(1, 6))
            except ValueError as exc:
                raise CorpusFormatError(f"{path}: row {idx}: {exc}") from exc
            stories.append(Story(sentences, id=row.get("id") or None, title=row.get("title") or None))
    return stories


def _load_jsonl(path: Path) -> list[Story]:
    stories = []
    with path.open(encoding="utf-8") as fh:
        for idx, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusFormatError(f"{path}: row {idx}: invalid JSON ({exc})") from exc
            if not isinstance(record, dict) or "sentences" not in record:
                raise CorpusFormatError(f"{path}: row {idx}: expected an object with a 'sentences' list")
            try:
                story = Story.from_texts(record["sentences"], id=record.get("id"), title=record.get("title"))
            except (TypeError, ValueError) as exc:
                raise CorpusFormatError(f"{path}: row {idx}: {exc}") from exc
            stories.append(story)
    return stories


def write_stories(stories: Sequence[Story], path: str | Path, format: str = FIVE_SENTENCE_CSV) -> None:
    """Write stories so that :func:`load_corpus` reproduces them exactly."""
    path = Path(path)
    if format == FIVE_SENTENCE_CSV:
        for story in stories:
            if len(story) != 5:
                raise CorpusFormatError(
                    f"five-sentence-csv requires 5 sentences per story, got {len(story)} (id={story.id!r})"
                )
        with path.open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(_CSV_COLUMNS)
            for story in stories:
                writer.writerow([story.id or "", story.title or "", *story.texts()])
    elif format == JSONL:
        with path.open("w", encoding="utf-8") as fh:
            for story in stories:
                record: dict = {"sentences": story.texts()}
                if story.id is not None:
                    record["id"] = story.id
                if story.title is not None:
                    record["title"] = story.title
                fh.write(json.dumps(record, ensure_ascii=False) + "\n")
    else:
        raise ValueError(f"unknown corpus format: {format!r} (expected one of {STORY_FORMATS})")


def split_train_val(stories: Sequence[Story], ratio: float = 0.8, seed: int = 0) -> CorpusSplit:
    """Seed-controlled random split; floor(len * ratio) stories go to train."""
    if not 0 < ratio < 1:
        raise ValueError(f"ratio must be in (0, 1), got {ratio}")
    if len(stories) < 2:
        raise ValueError(f"need at least 2 stories to split, got {len(stories)}")
    order = list(stories)
    random.Random(f"split:{seed}").shuffle(order)
    n_train = math.floor(len(order) * ratio)
    return CorpusSplit(train=tuple(order[:n_train]), validation=tuple(order[n_train:]), seed=seed)

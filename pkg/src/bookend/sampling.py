"""Fine-tuning sample construction from a story corpus.

Four sample families are emitted for external trainers: phrase lists for the
phrase generator, start/list/stop triples for the stop generator, masked
texts for the position classifier, and context/target pairs for the infill
generator. No fine-tuning happens here.
"""

from __future__ import annotations

import json
import logging
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .backends.base import TokenEmbedder, cosine
from .corpus import Sentence, Story

log = logging.getLogger(__name__)

LABEL_MISSING = "missing"
LABEL_NOT_MISSING = "not-missing"


@dataclass(frozen=True)
class PhraseList:
    """Ordered relatable tokens bridging a start and a stop. May be empty."""

    tokens: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "tokens", tuple(self.tokens))
        if any(not t for t in self.tokens):
            raise ValueError("phrase list tokens must be non-empty")
        if len(set(self.tokens)) != len(self.tokens):
            raise ValueError(f"phrase list has duplicate tokens: {self.tokens}")

    @classmethod
    def dedup(cls, tokens: Iterable[str]) -> "PhraseList":
        """Build a list keeping the first occurrence of each token."""
        seen: list[str] = []
        for token in tokens:
            if token and token not in seen:
                seen.append(token)
        return cls(tuple(seen))

    def joined(self) -> str:
        return ", ".join(self.tokens)

    def __len__(self) -> int:
        return len(self.tokens)

    def __iter__(self):
        return iter(self.tokens)


@dataclass(frozen=True)
class PhraseListSample:
    start: Sentence
    phrase_list: PhraseList


@dataclass(frozen=True)
class StopSample:
    start: Sentence
    phrase_list: PhraseList
    stop: Sentence


@dataclass(frozen=True)
class PositionSample:
    """Masked story text plus whether a sentence is actually missing there.

    `removed` keeps the removed span for audit and round-trip checks;
    classifier trainers only need (text, label).
    """

    text: str
    label: str
    mask_marker: str
    removed: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "removed", tuple(self.removed))
        if self.label not in (LABEL_MISSING, LABEL_NOT_MISSING):
            raise ValueError(f"unknown label: {self.label!r}")
        if self.text.count(self.mask_marker) != 1:
            raise ValueError(f"position sample must contain exactly one {self.mask_marker!r}")
        if (self.label == LABEL_MISSING) != bool(self.removed):
            raise ValueError("label and removed-span provenance disagree")


@dataclass(frozen=True)
class InfillSample:
    context: str
    target: Sentence
    mask_marker: str
    sep_marker: str

    def __post_init__(self) -> None:
        if self.context.count(self.mask_marker) != 1 or self.context.count(self.sep_marker) != 1:
            raise ValueError("infill context needs exactly one mask and one sep marker")
        if self.context.index(self.mask_marker) > self.context.index(self.sep_marker):
            raise ValueError("mask marker must precede sep marker")


def extract_phrase_list(
    start: Sentence,
    stop: Sentence,
    embedder: TokenEmbedder,
    gamma: float = 0.7,
) -> PhraseList:
    """Stop tokens whose best cosine against any start token exceeds gamma.

    Tokens come back in stop order, deduplicated keeping the first
    occurrence. Zero-norm embeddings score 0 and are logged, not fatal.
    """
    if not 0 < gamma < 1:
        raise ValueError(f"gamma must be in (0, 1), got {gamma}")
    start_vectors = [emb.vector for emb in embedder.embed_tokens(start)]
    picked: list[str] = []
    for emb in embedder.embed_tokens(stop):
        if float(np.linalg.norm(emb.vector)) == 0.0:
            log.warning("zero-norm embedding for stop token %r; treating cosine as 0", emb.token)
        best = 0.0
        for sv in start_vectors:
            best = max(best, cosine(emb.vector, sv))
        if best > gamma and emb.token not in picked:
            picked.append(emb.token)
    return PhraseList(tuple(picked))


def build_phrase_list_samples(
    corpus: Sequence[Story], embedder: TokenEmbedder, gamma: float = 0.7
) -> list[PhraseListSample]:
    return [
        PhraseListSample(start=s.start, phrase_list=s.phrase_list)
        for s in build_stop_samples(corpus, embedder, gamma)
    ]


def build_stop_samples(
    corpus: Sequence[Story], embedder: TokenEmbedder, gamma: float = 0.7
) -> list[StopSample]:
    """One start/phrase-list/stop triple per story, corpus order preserved."""
    samples = []
    for story in corpus:
        start, stop = story.start(), story.stop()
        samples.append(
            StopSample(start=start, phrase_list=extract_phrase_list(start, stop, embedder, gamma), stop=stop)
        )
    return samples


def build_position_samples(
    story: Story,
    seed: int,
    mask_marker: str = "<mask>",
    negatives: int = 1,
) -> list[PositionSample]:
    """Masked-position classifier samples for one story.

    Positive: remove 1-3 consecutive interior sentences at one site and put
    the marker there. Negative: insert the marker at an inter-sentence
    boundary of the intact story. Endpoints are never removed.
    """
    texts = story.texts()
    n = len(texts)
    if n < 4:
        raise ValueError(f"story too short for position sampling: {n} sentences (need >= 4)")
    if any(mask_marker in t for t in texts):
        raise ValueError(f"story text already contains the marker {mask_marker!r}")
    rng = random.Random(f"position:{seed}")

    k = rng.randint(1, min(3, n - 2))
    site = rng.randint(1, n - 1 - k)
    positive = PositionSample(
        text=" ".join(texts[:site] + [mask_marker] + texts[site + k :]),
        label=LABEL_MISSING,
        mask_marker=mask_marker,
        removed=tuple(texts[site : site + k]),
    )

    samples = [positive]
    for _ in range(negatives):
        boundary = rng.randint(1, n - 1)
        samples.append(
            PositionSample(
                text=" ".join(texts[:boundary] + [mask_marker] + texts[boundary:]),
                label=LABEL_NOT_MISSING,
                mask_marker=mask_marker,
            )
        )
    return samples


def build_infill_samples(
    story: Story, mask_marker: str = "<mask>", sep_marker: str = "<sep>"
) -> list[InfillSample]:
    """One sample per interior sentence; endpoints are never targets."""
    texts = story.texts()
    n = len(texts)
    if n < 3:
        raise ValueError(f"story too short for infill sampling: {n} sentences (need >= 3)")
    if any(mask_marker in t or sep_marker in t for t in texts):
        raise ValueError("story text collides with a marker literal")
    samples = []
    for i in range(1, n - 1):
        context = " ".join(texts[:i] + [mask_marker] + texts[i + 1 :] + [sep_marker])
        samples.append(
            InfillSample(context=context, target=story.sentences[i], mask_marker=mask_marker, sep_marker=sep_marker)
        )
    return samples


def sample_to_dict(sample) -> dict:
    if isinstance(sample, PhraseListSample):
        return {"kind": "phrase_list", "start": sample.start.text, "phrase_list": list(sample.phrase_list)}
    if isinstance(sample, StopSample):
        return {
            "kind": "stop",
            "start": sample.start.text,
            "phrase_list": list(sample.phrase_list),
            "stop": sample.stop.text,
        }
    if isinstance(sample, PositionSample):
        return {
            "kind": "position",
            "text": sample.text,
            "label": sample.label,
            "mask_marker": sample.mask_marker,
            "removed": list(sample.removed),
        }
    if isinstance(sample, InfillSample):
        return {
            "kind": "infill",
            "context": sample.context,
            "target": sample.target.text,
            "mask_marker": sample.mask_marker,
            "sep_marker": sample.sep_marker,
        }
    raise TypeError(f"not a sample: {type(sample).__name__}")


def sample_from_dict(record: dict):
    kind = record.get("kind")
    if kind == "phrase_list":
        return PhraseListSample(Sentence(record["start"]), PhraseList(tuple(record["phrase_list"])))
    if kind == "stop":
        return StopSample(
            Sentence(record["start"]), PhraseList(tuple(record["phrase_list"])), Sentence(record["stop"])
        )
    if kind == "position":
        return PositionSample(
            record["text"], record["label"], record["mask_marker"], tuple(record.get("removed", ()))
        )
    if kind == "infill":
        return InfillSample(
            record["context"], Sentence(record["target"]), record["mask_marker"], record["sep_marker"]
        )
    raise ValueError(f"unknown sample kind: {kind!r}")


def write_samples_jsonl(path: str | Path, samples: Iterable, config: dict | None = None) -> None:
    """Serialize samples one JSON object per line; a run-config line leads."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        if config is not None:
            fh.write(json.dumps({"kind": "run_config", **config}, ensure_ascii=False) + "\n")
        for sample in samples:
            fh.write(json.dumps(sample_to_dict(sample), ensure_ascii=False) + "\n")


def read_samples_jsonl(path: str | Path) -> list:
    samples = []
    with Path(path).open(encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            record = json.loads(line)
            if record.get("kind") == "run_config":
                continue
            samples.append(sample_from_dict(record))
    return samples

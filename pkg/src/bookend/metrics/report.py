"""Per-story scoring and corpus aggregation in the relatedness/quality table shape."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from statistics import fmean, pstdev
from typing import Sequence

from ..backends.base import SentenceEmbedder
from ..corpus import Story
from .quality import bleu, corpus_distinct_ngrams, distinct_ngrams, story_bleu
from .relatedness import cosine_relatedness, dice_overlap
from .syntax import ParseError, SyntaxParser, syntax_similarity

log = logging.getLogger(__name__)

METRIC_COLUMNS = (
    ("lexical_overlap", "Lexical Overlap"),
    ("cosine_similarity", "Cosine Sim."),
    ("syntax_similarity", "Syntax Sim."),
    ("distinct_ngrams", "Distinct n-grams"),
    ("bleu", "BLEU"),
)


@dataclass(frozen=True)
class EndpointRelatedness:
    lexical_overlap: float
    cosine_similarity: float
    syntax_similarity: float | None

    def to_dict(self) -> dict:
        return {
            "lexical_overlap": self.lexical_overlap,
            "cosine_similarity": self.cosine_similarity,
            "syntax_similarity": self.syntax_similarity,
        }


@dataclass(frozen=True)
class QualityScores:
    distinct_ngrams: float
    bleu: float | None = None

    def to_dict(self) -> dict:
        return {"distinct_ngrams": self.distinct_ngrams, "bleu": self.bleu}


@dataclass(frozen=True)
class MetricAggregate:
    mean: float
    std: float
    count: int

    def to_dict(self) -> dict:
        return {"mean": self.mean, "std": self.std, "count": self.count}

    def cell(self) -> str:
        return f"{self.mean:.3f}±{self.std:.3f}"


@dataclass(frozen=True)
class AggregateReport:
    count: int
    metrics: dict[str, MetricAggregate]
    corpus_bleu: float | None
    corpus_distinct_ngrams: float
    syntax_skipped: int
    embedder: str
    syntax_backend: str
    config: dict | None = None

    def to_dict(self) -> dict:
        return {
            "count": self.count,
            "metrics": {name: agg.to_dict() for name, agg in self.metrics.items()},
            "corpus_bleu": self.corpus_bleu,
            "corpus_distinct_ngrams": self.corpus_distinct_ngrams,
            "syntax_skipped": self.syntax_skipped,
            "embedder": self.embedder,
            "syntax_backend": self.syntax_backend,
            "config": self.config,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, ensure_ascii=False)


def _aggregate(values: Sequence[float]) -> MetricAggregate | None:
    if not values:
        return None
    return MetricAggregate(mean=fmean(values), std=pstdev(values), count=len(values))


def evaluate_story(
    story: Story,
    embedder: SentenceEmbedder,
    syntax_backend: SyntaxParser,
    reference: Story | None = None,
) -> tuple[EndpointRelatedness, QualityScores]:
    """Endpoint relatedness on (start, stop) plus per-story quality scores."""
    start, stop = story.start(), story.stop()
    try:
        syntax = syntax_similarity(start, stop, syntax_backend)
    except ParseError as exc:
        log.warning("syntax parse failed for story %r: %s", story.id, exc)
        syntax = None
    relatedness = EndpointRelatedness(
        lexical_overlap=dice_overlap(start, stop),
        cosine_similarity=cosine_relatedness(start, stop, embedder),
        syntax_similarity=syntax,
    )
    quality = QualityScores(
        distinct_ngrams=distinct_ngrams(story),
        bleu=story_bleu(story, reference) if reference is not None else None,
    )
    return relatedness, quality


def evaluate_corpus(
    stories: Sequence[Story],
    embedder: SentenceEmbedder,
    syntax_backend: SyntaxParser,
    references: Sequence[Story] | None = None,
    config: dict | None = None,
) -> AggregateReport:
    """Mean and population std per metric; BLEU also corpus-level when
    references are given."""
    if not stories:
        raise ValueError("cannot evaluate an empty story set")
    if references is not None and len(references) != len(stories):
        raise ValueError(f"{len(stories)} stories vs {len(references)} references")

    columns: dict[str, list[float]] = {
        "lexical_overlap": [],
        "cosine_similarity": [],
        "syntax_similarity": [],
        "distinct_ngrams": [],
        "bleu": [],
    }
    skipped = 0
    for idx, story in enumerate(stories):
        reference = references[idx] if references is not None else None
        relatedness, quality = evaluate_story(story, embedder, syntax_backend, reference)
        columns["lexical_overlap"].append(relatedness.lexical_overlap)
        columns["cosine_similarity"].append(relatedness.cosine_similarity)
        if relatedness.syntax_similarity is None:
            skipped += 1
        else:
            columns["syntax_similarity"].append(relatedness.syntax_similarity)
        columns["distinct_ngrams"].append(quality.distinct_ngrams)
        if quality.bleu is not None:
            columns["bleu"].append(quality.bleu)

    metrics = {name: agg for name, values in columns.items() if (agg := _aggregate(values)) is not None}
    return AggregateReport(
        count=len(stories),
        metrics=metrics,
        corpus_bleu=bleu(stories, list(references)) if references is not None else None,
        corpus_distinct_ngrams=corpus_distinct_ngrams(stories),
        syntax_skipped=skipped,
        embedder=getattr(embedder, "name", type(embedder).__name__),
        syntax_backend=getattr(syntax_backend, "name", type(syntax_backend).__name__),
        config=config,
    )


def format_table(report: AggregateReport, row_label: str = "evaluated") -> str:
    """Aligned text table: metric columns with mean±std cells, one data row."""
    headers = ["Model"] + [title for _, title in METRIC_COLUMNS]
    cells = [row_label]
    for name, _ in METRIC_COLUMNS:
        agg = report.metrics.get(name)
        if name == "bleu":
            if agg is not None and report.corpus_bleu is not None:
                cells.append(f"{report.corpus_bleu:.2f} (per-story {agg.cell()})")
            elif report.corpus_bleu is not None:
                cells.append(f"{report.corpus_bleu:.2f}")
            else:
                cells.append("--")
        elif agg is None:
            cells.append("--")
        else:
            cells.append(agg.cell())
    widths = [max(len(h), len(c)) for h, c in zip(headers, cells)]
    header_line = " | ".join(h.ljust(w) for h, w in zip(headers, widths))
    rule = "-+-".join("-" * w for w in widths)
    data_line = " | ".join(c.ljust(w) for c, w in zip(cells, widths))
    return "\n".join([header_line, rule, data_line])

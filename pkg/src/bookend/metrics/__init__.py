"""Automatic evaluation: endpoint relatedness and overall story quality."""

from .quality import bleu, corpus_distinct_ngrams, distinct_ngrams, story_bleu
from .relatedness import cosine_relatedness, dice_overlap
from .report import (
    AggregateReport,
    EndpointRelatedness,
    MetricAggregate,
    QualityScores,
    evaluate_corpus,
    evaluate_story,
    format_table,
)
from .syntax import (
    LabeledTree,
    ParseError,
    SyntaxParser,
    TokenShapeParser,
    fragment_kernel,
    syntax_similarity,
    tree_similarity,
)

__all__ = [
    "AggregateReport",
    "EndpointRelatedness",
    "LabeledTree",
    "MetricAggregate",
    "ParseError",
    "QualityScores",
    "SyntaxParser",
    "TokenShapeParser",
    "bleu",
    "corpus_distinct_ngrams",
    "cosine_relatedness",
    "dice_overlap",
    "distinct_ngrams",
    "evaluate_corpus",
    "evaluate_story",
    "format_table",
    "fragment_kernel",
    "story_bleu",
    "syntax_similarity",
    "tree_similarity",
]

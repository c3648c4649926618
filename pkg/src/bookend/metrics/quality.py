"""Overall quality: distinct n-gram diversity and corpus BLEU."""

from __future__ import annotations

import math
from collections import Counter
from statistics import fmean
from typing import Sequence

from ..corpus import Story

MAX_DISTINCT_N = 5
BLEU_MAX_N = 4


def _ngrams(tokens: Sequence[str], n: int) -> list[tuple[str, ...]]:
    return [tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1)]


def distinct_ngrams(story: Story, max_n: int = MAX_DISTINCT_N) -> float:
    """Mean over n=1..max_n of distinct/total n-grams in the token stream.

    n values with zero total n-grams (stream shorter than n) are skipped
    rather than treated as 0/0.
    """
    stream: list[str] = []
    for sentence in story.sentences:
        stream.extend(sentence.tokens)
    ratios = []
    for n in range(1, max_n + 1):
        grams = _ngrams(stream, n)
        if grams:
            ratios.append(len(set(grams)) / len(grams))
    return fmean(ratios)


def corpus_distinct_ngrams(stories: Sequence[Story], max_n: int = MAX_DISTINCT_N) -> float:
    """Corpus-level variant: n-grams pooled over every story before the ratio."""
    ratios = []
    for n in range(1, max_n + 1):
        distinct: set = set()
        total = 0
        for story in stories:
            stream = [t for s in story.sentences for t in s.tokens]
            grams = _ngrams(stream, n)
            distinct.update(grams)
            total += len(grams)
        if total:
            ratios.append(len(distinct) / total)
    return fmean(ratios)


def bleu(candidates: Sequence[Story], references: Sequence[Story], smooth: bool = False) -> float:
    """Corpus BLEU on [0, 100]: clipped n-gram precisions up to 4, geometric
    mean, multiplicative brevity penalty.

    One reference per candidate, aligned by index. Precision levels with no
    candidate n-grams at all are left out of the geometric mean; with
    `smooth`, zero-match levels get add-one smoothing instead of zeroing the
    score.
    """
    if len(candidates) != len(references):
        raise ValueError(f"{len(candidates)} candidates vs {len(references)} references")
    if not candidates:
        raise ValueError("cannot score an empty corpus")

    matched = [0] * (BLEU_MAX_N + 1)
    total = [0] * (BLEU_MAX_N + 1)
    candidate_length = 0
    reference_length = 0
    for candidate, reference in zip(candidates, references):
        cand_tokens = [t for s in candidate.sentences for t in s.tokens]
        ref_tokens = [t for s in reference.sentences for t in s.tokens]
        candidate_length += len(cand_tokens)
        reference_length += len(ref_tokens)
        for n in range(1, BLEU_MAX_N + 1):
            cand_counts = Counter(_ngrams(cand_tokens, n))
            ref_counts = Counter(_ngrams(ref_tokens, n))
            total[n] += sum(cand_counts.values())
            matched[n] += sum(min(count, ref_counts[gram]) for gram, count in cand_counts.items())

    log_sum = 0.0
    levels = 0
    for n in range(1, BLEU_MAX_N + 1):
        if total[n] == 0:
            continue
        if matched[n] == 0:
            if not smooth:
                return 0.0
            precision = 1 / (total[n] + 1)
        else:
            precision = matched[n] / total[n]
        log_sum += math.log(precision)
        levels += 1
    if levels == 0:
        return 0.0

    if candidate_length >= reference_length:
        brevity = 1.0
    else:
        brevity = math.exp(1 - reference_length / candidate_length)
    return 100.0 * brevity * math.exp(log_sum / levels)


def story_bleu(candidate: Story, reference: Story, smooth: bool = False) -> float:
    """Per-story variant: the candidate scored against its own reference."""
    return bleu([candidate], [reference], smooth=smooth)

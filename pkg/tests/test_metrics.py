from statistics import fmean, pstdev

import numpy as np
import pytest

from bookend.backends import HashSentenceEmbedder, SentenceEmbedding
from bookend.corpus import Sentence, Story
from bookend.metrics import (
    LabeledTree,
    ParseError,
    TokenShapeParser,
    bleu,
    corpus_distinct_ngrams,
    cosine_relatedness,
    dice_overlap,
    distinct_ngrams,
    evaluate_corpus,
    evaluate_story,
    format_table,
    fragment_kernel,
    story_bleu,
    syntax_similarity,
    tree_similarity,
)

from .conftest import VOCAB, random_story
from .oracles import (
    bleu_oracle,
    dice_oracle,
    distinct_oracle,
    kernel_oracle,
    random_labeled_tree,
    tree_similarity_oracle,
)


class FixedEmbedder:
    """Maps exact sentence texts to fixed vectors."""

    name = "fixed-embedder"

    def __init__(self, table):
        self.table = {k: np.asarray(v, dtype=float) for k, v in table.items()}

    def embed_sentence(self, sentence):
        return SentenceEmbedding(self.table[sentence.text])


class FailingParser:
    name = "failing-parser"

    def parse(self, sentence):
        raise ParseError("no tree for you")


class TestDice:
    def test_identical_sentences(self):
        s = Sentence("alice went home.")
        assert dice_overlap(s, s) == 1.0

    def test_disjoint(self):
        assert dice_overlap(Sentence("alice went home."), Sentence("dog chased ball.")) == 0.0

    def test_worked_example(self):
        # token sets {a,b,c} and {b,c,d}: 2*2/(3+3) = 2/3
        value = dice_overlap(Sentence("a b c"), Sentence("b c d"))
        assert value == pytest.approx(2 / 3, abs=1e-12)

    def test_symmetry_and_range(self, rng):
        for _ in range(50):
            a = Sentence(" ".join(rng.choice(VOCAB) for _ in range(rng.randint(1, 8))))
            b = Sentence(" ".join(rng.choice(VOCAB) for _ in range(rng.randint(1, 8))))
            d = dice_overlap(a, b)
            assert d == dice_overlap(b, a)
            assert 0.0 <= d <= 1.0
            assert (d == 1.0) == (set(a.tokens) == set(b.tokens))

    def test_matches_oracle(self, rng):
        for _ in range(100):
            a = Sentence(" ".join(rng.choice(VOCAB) for _ in range(rng.randint(1, 10))))
            b = Sentence(" ".join(rng.choice(VOCAB) for _ in range(rng.randint(1, 10))))
            assert dice_overlap(a, b) == pytest.approx(dice_oracle(a.tokens, b.tokens), abs=1e-12)


class TestCosineRelatedness:
    def test_self_similarity(self):
        emb = HashSentenceEmbedder()
        s = Sentence("alice went home today.")
        assert cosine_relatedness(s, s, emb) == pytest.approx(1.0, abs=1e-9)

    def test_orthogonal_vectors(self):
        emb = FixedEmbedder({"a one.": [1, 0, 0], "b two.": [0, 1, 0]})
        assert cosine_relatedness(Sentence("a one."), Sentence("b two."), emb) == 0.0

    def test_fixture_hand_arithmetic(self):
        # (1,2,2)·(2,2,1) = 8, norms 3 and 3 -> 8/9
        emb = FixedEmbedder({"a one.": [1, 2, 2], "b two.": [2, 2, 1]})
        value = cosine_relatedness(Sentence("a one."), Sentence("b two."), emb)
        assert value == pytest.approx(8 / 9, abs=1e-12)

    def test_zero_norm_gives_zero(self):
        emb = FixedEmbedder({"a one.": [0, 0, 0], "b two.": [1, 0, 0]})
        assert cosine_relatedness(Sentence("a one."), Sentence("b two."), emb) == 0.0


def tree(label, *children):
    return LabeledTree(label, tuple(c if isinstance(c, LabeledTree) else LabeledTree(c) for c in children))


class TestTreeKernel:
    def test_identical_trees_similarity_one(self):
        t = tree("s", tree("a", "x"), tree("b", "y"))
        assert tree_similarity(t, t) == pytest.approx(1.0, abs=1e-12)

    def test_disjoint_labels_zero(self):
        t1 = tree("s", tree("a", "x"))
        t2 = tree("t", tree("b", "y"))
        assert tree_similarity(t1, t2) == 0.0

    def test_hand_built_shared_production(self):
        # t1 = s(a(x), b(y)), t2 = t(a(x), c(z)): only fragment (a x) is
        # shared. Oracle enumeration gives K12=1, K11=K22=6 -> 1/6.
        t1 = tree("s", tree("a", "x"), tree("b", "y"))
        t2 = tree("t", tree("a", "x"), tree("c", "z"))
        assert fragment_kernel(t1, t2) == 1
        assert fragment_kernel(t1, t1) == 6
        assert tree_similarity(t1, t2) == pytest.approx(1 / 6, abs=1e-12)
        assert tree_similarity(t1, t2) == pytest.approx(tree_similarity_oracle(t1, t2), abs=1e-12)

    def test_matches_enumeration_oracle(self, rng):
        for _ in range(60):
            t1 = random_labeled_tree(rng)
            t2 = random_labeled_tree(rng)
            assert fragment_kernel(t1, t2) == kernel_oracle(t1, t2)
            assert tree_similarity(t1, t2) == pytest.approx(tree_similarity_oracle(t1, t2), abs=1e-12)

    def test_single_node_trees_score_zero(self):
        assert tree_similarity(LabeledTree("a"), LabeledTree("a")) == 0.0

    def test_parser_backend_path(self):
        parser = TokenShapeParser()
        a = Sentence("cat sat here.")
        assert syntax_similarity(a, a, parser) == pytest.approx(1.0, abs=1e-12)
        # same shape classes, different tokens: shares the root production only
        b = Sentence("dog ran away.")
        assert 0.0 < syntax_similarity(a, b, parser) < 1.0


class TestDistinctNgrams:
    def test_all_unique_tokens(self):
        story = Story.from_texts(["a b c.", "d e f g."])
        assert distinct_ngrams(story) == 1.0

    def test_repeated_single_token_stream(self):
        # stream "a a a a a a": ratios 1/6, 1/5, 1/4, 1/3, 1/2; mean 0.29
        story = Story.from_texts(["a a a.", "a a a."])
        assert distinct_ngrams(story) == pytest.approx(0.29, abs=1e-12)

    def test_short_story_skips_missing_orders(self):
        # 2 tokens: only n=1 and n=2 contribute
        story = Story.from_texts(["a.", "b."])
        assert distinct_ngrams(story) == 1.0
        story = Story.from_texts(["a.", "a."])
        assert distinct_ngrams(story) == pytest.approx((0.5 + 1.0) / 2, abs=1e-12)

    def test_matches_oracle(self, rng):
        for _ in range(100):
            story = random_story(rng, rng.randint(2, 6))
            stream = [t for s in story.sentences for t in s.tokens]
            assert distinct_ngrams(story) == pytest.approx(distinct_oracle(stream), abs=1e-12)

    def test_range_property(self, rng):
        for _ in range(30):
            story = random_story(rng, rng.randint(2, 8))
            assert 0.0 < distinct_ngrams(story) <= 1.0

    def test_corpus_level_variant(self):
        s1 = Story.from_texts(["a b.", "c d."])
        s2 = Story.from_texts(["a b.", "c d."])
        # pooled: every n-gram appears twice -> each ratio 0.5
        assert corpus_distinct_ngrams([s1, s2]) == pytest.approx(0.5, abs=1e-12)


class TestBleu:
    def test_identity_is_100(self, rng):
        corpus = [random_story(rng, 5) for _ in range(8)]
        assert bleu(corpus, corpus) == 100.0

    def test_zero_fourgram_overlap_zero_score(self):
        cand = Story.from_texts(["a b c.", "d e f."])
        ref = Story.from_texts(["a x b.", "y c z."])
        assert bleu([cand], [ref]) == 0.0

    def test_smoothing_recovers_nonzero(self):
        cand = Story.from_texts(["a b c.", "d e f."])
        ref = Story.from_texts(["a x b.", "y c z."])
        assert 0.0 < bleu([cand], [ref], smooth=True) < 100.0

    def test_matches_oracle_on_toy_corpora(self, rng):
        for _ in range(50):
            size = rng.randint(1, 5)
            cands = [random_story(rng, rng.randint(2, 5)) for _ in range(size)]
            refs = [random_story(rng, rng.randint(2, 5)) for _ in range(size)]
            cand_tokens = [[t for s in c.sentences for t in s.tokens] for c in cands]
            ref_tokens = [[t for s in r.sentences for t in s.tokens] for r in refs]
            assert bleu(cands, refs) == pytest.approx(bleu_oracle(cand_tokens, ref_tokens), abs=1e-6)

    def test_reorder_invariance(self, rng):
        cands = [random_story(rng, 4) for _ in range(6)]
        refs = [random_story(rng, 4) for _ in range(6)]
        order = list(range(6))
        rng.shuffle(order)
        assert bleu(cands, refs) == pytest.approx(
            bleu([cands[i] for i in order], [refs[i] for i in order]), abs=1e-12
        )

    def test_length_mismatch_rejected(self, rng):
        with pytest.raises(ValueError):
            bleu([random_story(rng, 3)], [])

    def test_brevity_penalty_direction(self):
        short = Story.from_texts(["a b.", "c d."])
        long = Story.from_texts(["a b.", "c d.", "e f g h."])
        assert story_bleu(short, long) < story_bleu(long, long)


class TestAggregates:
    def test_single_story_report(self, rng):
        story = random_story(rng, 5)
        emb = HashSentenceEmbedder()
        parser = TokenShapeParser()
        report = evaluate_corpus([story], emb, parser)
        relatedness, quality = evaluate_story(story, emb, parser)
        assert report.count == 1
        assert report.metrics["lexical_overlap"].mean == relatedness.lexical_overlap
        assert report.metrics["lexical_overlap"].std == 0.0
        assert report.metrics["distinct_ngrams"].mean == quality.distinct_ngrams

    def test_two_identical_stories_zero_std(self, rng):
        story = random_story(rng, 5)
        report = evaluate_corpus([story, story], HashSentenceEmbedder(), TokenShapeParser())
        for aggregate in report.metrics.values():
            assert aggregate.std == 0.0

    def test_aggregates_match_external_recomputation(self, rng):
        stories = [random_story(rng, 5) for _ in range(10)]
        emb = HashSentenceEmbedder()
        parser = TokenShapeParser()
        report = evaluate_corpus(stories, emb, parser)
        per_story = [evaluate_story(s, emb, parser) for s in stories]
        overlaps = [r.lexical_overlap for r, _ in per_story]
        assert report.metrics["lexical_overlap"].mean == pytest.approx(fmean(overlaps), abs=1e-12)
        assert report.metrics["lexical_overlap"].std == pytest.approx(pstdev(overlaps), abs=1e-12)
        distincts = [q.distinct_ngrams for _, q in per_story]
        assert report.metrics["distinct_ngrams"].mean == pytest.approx(fmean(distincts), abs=1e-12)

    def test_references_add_bleu_columns(self, rng):
        stories = [random_story(rng, 5) for _ in range(4)]
        report = evaluate_corpus(stories, HashSentenceEmbedder(), TokenShapeParser(), references=stories)
        assert report.corpus_bleu == 100.0
        assert report.metrics["bleu"].mean == 100.0

    def test_parse_failures_skipped_and_counted(self, rng):
        stories = [random_story(rng, 5) for _ in range(3)]
        report = evaluate_corpus(stories, HashSentenceEmbedder(), FailingParser())
        assert report.syntax_skipped == 3
        assert "syntax_similarity" not in report.metrics

    def test_empty_story_set_rejected(self):
        with pytest.raises(ValueError):
            evaluate_corpus([], HashSentenceEmbedder(), TokenShapeParser())

    def test_table_shape(self, rng):
        stories = [random_story(rng, 5) for _ in range(3)]
        report = evaluate_corpus(stories, HashSentenceEmbedder(), TokenShapeParser(), references=stories)
        table = format_table(report, row_label="fixture")
        lines = table.splitlines()
        assert len(lines) == 3
        assert "Lexical Overlap" in lines[0]
        assert "±" in lines[2]

    def test_report_records_backend_identity(self, rng):
        report = evaluate_corpus([random_story(rng, 5)], HashSentenceEmbedder(), TokenShapeParser())
        assert "hash-sentence-embedder" in report.embedder
        assert report.syntax_backend == "token-shape-parser"

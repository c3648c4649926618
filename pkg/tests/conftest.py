"""Shared fixtures: a hash-collision-free vocabulary and random story factories."""

from __future__ import annotations

import random

import pytest

from bookend.corpus import Sentence, Story

# Verified in test_backends: no two words share both hash coordinates of the
# stub embedder, so stub cosine is exactly 1.0 iff tokens are equal.
VOCAB = tuple(
    """alice bob carol david emma frank grace henry irene jack karen liam
mary noah olivia peter quinn rachel sam tina ursula victor wendy xavier yara zach
home house garden park school store market river lake mountain forest beach city town farm
dog cat bird horse fish rabbit mouse lion tiger bear wolf fox deer owl duck
went walked ran jumped stayed played worked slept cooked baked painted sang danced wrote read
happy sad tired excited nervous proud calm brave shy angry curious gentle quiet loud bright
morning evening night summer winter spring autumn today tomorrow yesterday
red blue green yellow purple orange silver golden brown black white
big small tall short old new young fast slow warm cold sweet
the a an and but with for from into over under near
he she they we you it his her their our your its
was were is are has had will would could should might must
friend family mother father sister brother teacher doctor neighbor baker farmer singer
ball book chair table door window lamp clock phone letter box key cup plate
found lost bought sold gave took made broke fixed opened closed carried""".split()
)


def random_sentence(rng: random.Random, min_words: int = 3, max_words: int = 9) -> Sentence:
    words = [rng.choice(VOCAB) for _ in range(rng.randint(min_words, max_words))]
    return Sentence(" ".join(words).capitalize() + ".")


def random_story(rng: random.Random, length: int, id: str | None = None) -> Story:
    return Story(tuple(random_sentence(rng) for _ in range(length)), id=id)


@pytest.fixture
def rng() -> random.Random:
    return random.Random(20240901)

"""Shared deterministic generators for property-style tests."""

from __future__ import annotations

import random

import pytest

from snk.tagcodec import EntityLabel, TaggedTranscript

LABELS = list(EntityLabel)


def random_transcript(rng: random.Random, max_tokens: int = 10) -> TaggedTranscript:
    """Random valid transcript: [a-z]+ tokens, non-overlapping random spans."""
    n = rng.randint(0, max_tokens)
    tokens = [
        "".join(rng.choice("abcdefghijklmnopqrstuvwxyz") for _ in range(rng.randint(1, 6)))
        for _ in range(n)
    ]
    spans = []
    pos = 0
    while pos < n:
        if rng.random() < 0.4:
            start = pos
            end = min(n, start + rng.randint(1, 3))
            spans.append((rng.choice(LABELS), start, end))
            pos = end
        else:
            pos += 1
    return TaggedTranscript.build(tokens, spans)


def random_tagged_string(rng: random.Random, max_items: int = 14) -> str:
    """Arbitrary whitespace-joined soup of words and tag symbols."""
    items = []
    for _ in range(rng.randint(0, max_items)):
        roll = rng.random()
        if roll < 0.3:
            items.append(rng.choice("{[$]"))
        elif roll < 0.45:
            # glue symbols into a word
            word = "".join(rng.choice("ab{[$]xy'") for _ in range(rng.randint(1, 5)))
            items.append(word)
        else:
            items.append("".join(rng.choice("abcdefgh") for _ in range(rng.randint(1, 5))))
    return " ".join(items)


@pytest.fixture
def rng() -> random.Random:
    return random.Random(0xC0FFEE)

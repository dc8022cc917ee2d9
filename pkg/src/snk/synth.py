"""Synthetic tagged-speech corpora for desk-scale experiments.

Each utterance is sampled from a per-language lexicon (plain words plus
PER/ORG/LOC entity surfaces), serialized to the inline tag format, and
rendered symbol by symbol as noisy one-hot feature frames. Languages in
one :class:`SynthSpec` share the feature space, so a model trained on
one can be applied or fine-tuned on another.

Two worlds ship with the toolkit: ``overlapping`` (the target shares
about half of its entity inventory and word material with the source)
and ``disjoint`` (no shared surfaces), giving the two transfer regimes
a reproducible playground.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .corpus import Lang, UtteranceRecord, read_manifest, write_manifest
from .ctc import Vocab, default_vocab
from .errors import FormatError, MissingCorpusError
from .tagcodec import EntityLabel, TaggedTranscript, encode_inline, strip_tags

__all__ = [
    "Lexicon",
    "SynthSpec",
    "SynthDataset",
    "synth_generate",
    "make_dataset",
    "overlapping_world",
    "disjoint_world",
    "world_by_name",
    "write_synth_corpus",
    "load_synth_corpus",
    "FRAME_RATE",
]

FRAME_RATE = 100.0  # nominal frames per second, for manifest durations

Example = tuple[np.ndarray, str]


@dataclass(frozen=True)
class Lexicon:
    """Token and entity distributions for one synthetic language."""

    words: tuple[str, ...]
    entities: Mapping[EntityLabel, tuple[str, ...]]
    entity_rate: float = 0.35

    def __post_init__(self) -> None:
        if not self.words:
            raise ValueError("lexicon needs at least one word")
        if not 0.0 <= self.entity_rate <= 1.0:
            raise ValueError("entity_rate must lie in [0, 1]")


@dataclass(frozen=True)
class SynthSpec:
    """Generation parameters; a pure function of (spec, seed) downstream."""

    lexicons: Mapping[str, Lexicon]
    frames_per_symbol: tuple[int, int] = (2, 3)
    noise_sigma: float = 0.15
    feature_dim: int = 40
    sentence_length: tuple[int, int] = (3, 6)
    vocab: Vocab = field(default_factory=default_vocab)

    def __post_init__(self) -> None:
        lo, hi = self.frames_per_symbol
        if lo < 1 or hi < lo:
            raise ValueError("frames_per_symbol must be a range with 1 <= lo <= hi")
        if self.feature_dim < len(self.vocab):
            raise ValueError("feature_dim must cover the vocabulary one-hots")


def _sample_transcript(spec: SynthSpec, lex: Lexicon, rng: np.random.Generator) -> TaggedTranscript:
    lo, hi = spec.sentence_length
    n_tokens = int(rng.integers(lo, hi + 1))
    labels = [label for label in EntityLabel if lex.entities.get(label)]
    tokens: list[str] = []
    spans: list[tuple[EntityLabel, int, int]] = []
    while len(tokens) < n_tokens:
        if labels and rng.random() < lex.entity_rate:
            label = labels[int(rng.integers(0, len(labels)))]
            surfaces = lex.entities[label]
            surface = surfaces[int(rng.integers(0, len(surfaces)))]
            parts = surface.split()
            spans.append((label, len(tokens), len(tokens) + len(parts)))
            tokens.extend(parts)
        else:
            tokens.append(lex.words[int(rng.integers(0, len(lex.words)))])
    return TaggedTranscript.build(tokens, spans)


def _render_frames(spec: SynthSpec, symbol_ids: Sequence[int], rng: np.random.Generator) -> np.ndarray:
    lo, hi = spec.frames_per_symbol
    reps = rng.integers(lo, hi + 1, size=len(symbol_ids))
    frames = rng.normal(0.0, spec.noise_sigma, (int(reps.sum()), spec.feature_dim))
    pos = 0
    for sym, rep in zip(symbol_ids, reps):
        frames[pos : pos + rep, sym] += 1.0
        pos += rep
    return frames


def synth_generate(spec: SynthSpec, lang: str, n: int, seed: int) -> list[Example]:
    """Sample ``n`` (frames, tagged string) pairs for one language.

    Deterministic: repeated calls with the same arguments are bitwise
    identical.
    """
    if lang not in spec.lexicons:
        raise MissingCorpusError(f"no lexicon named {lang!r}")
    lex = spec.lexicons[lang]
    rng = np.random.default_rng(seed)
    out: list[Example] = []
    for _ in range(max(0, n)):
        tagged = encode_inline(_sample_transcript(spec, lex, rng))
        frames = _render_frames(spec, spec.vocab.encode(tagged), rng)
        out.append((frames, tagged))
    return out


@dataclass(frozen=True)
class SynthDataset:
    train: tuple[Example, ...]
    test: tuple[Example, ...]


def make_dataset(spec: SynthSpec, lang: str, n_train: int, n_test: int, seed: int) -> SynthDataset:
    """Fixed train/test split drawn from disjoint generator streams."""
    return SynthDataset(
        train=tuple(synth_generate(spec, lang, n_train, seed)),
        test=tuple(synth_generate(spec, lang, n_test, seed + 7919)),
    )


# ---------------------------------------------------------------------------
# Bundled worlds
# ---------------------------------------------------------------------------

# Surfaces avoid doubled letters: an affine per-frame classifier cannot
# reliably separate identical adjacent symbol runs with a blank, and the
# transfer story only needs surface overlap, not repeat handling. The
# source material stays within letters a-m; "novel" target material draws
# on n-z, so unseen-character coverage drives the zero-shot gap.
_SRC_WORDS = (
    "bad", "cab", "dig", "fad", "gem", "had", "jam", "keg", "lid", "mad",
    "calf", "dial", "film", "glad", "lamb", "maid", "claim", "medal",
)
_SHARED_WORDS = ("bead", "fame", "milk", "lick", "mild", "badge")
_NOVEL_WORDS = ("nut", "sow", "toy", "run", "pot", "stun", "spur", "worn", "rust")

_SHARED_ENTITIES = {
    EntityLabel.PER: ("mia", "kim"),
    EntityLabel.ORG: ("acme", "digiflag"),
    EntityLabel.LOC: ("lima", "mali"),
}
_SRC_ONLY_ENTITIES = {
    EntityLabel.PER: ("jack", "delia"),
    EntityLabel.ORG: ("media lab",),
    EntityLabel.LOC: ("bali", "chad"),
}
_TGT_ONLY_ENTITIES = {
    EntityLabel.PER: ("orson", "ruth"),
    EntityLabel.ORG: ("nova corp",),
    EntityLabel.LOC: ("oslo", "porto"),
}


def _merge(*tables: Mapping[EntityLabel, tuple[str, ...]]) -> dict[EntityLabel, tuple[str, ...]]:
    out: dict[EntityLabel, tuple[str, ...]] = {}
    for table in tables:
        for label, surfaces in table.items():
            out[label] = out.get(label, ()) + tuple(surfaces)
    return out


def overlapping_world() -> SynthSpec:
    """Source/target pair with roughly half-shared entity inventories."""
    source = Lexicon(_SRC_WORDS + _SHARED_WORDS, _merge(_SHARED_ENTITIES, _SRC_ONLY_ENTITIES))
    target = Lexicon(_SHARED_WORDS + _NOVEL_WORDS, _merge(_SHARED_ENTITIES, _TGT_ONLY_ENTITIES))
    return SynthSpec(lexicons={Lang.DE.value: source, Lang.NL.value: target})


def disjoint_world() -> SynthSpec:
    """Source/target pair with no shared words or entity surfaces."""
    source = Lexicon(_SRC_WORDS, _SRC_ONLY_ENTITIES)
    target = Lexicon(
        _NOVEL_WORDS,
        {
            EntityLabel.PER: ("rosy", "tony"),
            EntityLabel.ORG: ("sunspot", "nor town"),
            EntityLabel.LOC: ("porto", "upton"),
        },
    )
    return SynthSpec(lexicons={Lang.DE.value: source, Lang.NL.value: target})


def world_by_name(name: str) -> SynthSpec:
    worlds = {"overlapping": overlapping_world, "disjoint": disjoint_world}
    if name not in worlds:
        raise MissingCorpusError(f"unknown world {name!r} (expected one of {sorted(worlds)})")
    return worlds[name]()


# ---------------------------------------------------------------------------
# On-disk layout: manifest.jsonl + frames/<id>.npy sidecars
# ---------------------------------------------------------------------------

def write_synth_corpus(directory, examples: Sequence[Example], lang: str) -> None:
    directory = Path(directory)
    (directory / "frames").mkdir(parents=True, exist_ok=True)
    records = []
    for i, (frames, tagged) in enumerate(examples):
        utt_id = f"utt-{i:05d}"
        rel = f"frames/{utt_id}.npy"
        np.save(directory / rel, frames)
        records.append(
            UtteranceRecord(
                id=utt_id,
                audio_path=rel,
                duration_s=frames.shape[0] / FRAME_RATE,
                lang=Lang(lang),
                text=strip_tags(tagged),
                tagged_text=tagged,
            )
        )
    with open(directory / "manifest.jsonl", "w", encoding="utf-8") as fp:
        write_manifest(records, fp)


def load_synth_corpus(directory) -> tuple[list[UtteranceRecord], list[Example]]:
    directory = Path(directory)
    manifest = directory / "manifest.jsonl"
    if not manifest.exists():
        raise FormatError(f"{manifest}: no such manifest")
    with open(manifest, encoding="utf-8") as fp:
        records = read_manifest(fp)
    examples: list[Example] = []
    for rec in records:
        if rec.tagged_text is None:
            raise FormatError(f"{rec.id}: synthetic record lacks tagged_text")
        frames = np.load(directory / rec.audio_path)
        examples.append((frames, rec.tagged_text))
    return records, examples

"""Inline entity-tag transcript codec.

Transcripts carry typed entity spans either as structured values
(:class:`TaggedTranscript`) or serialized inline, where ``{``, ``[`` and
``$`` open an ORG/PER/LOC span and ``]`` closes the current span:

    he met [ john ] in $ berlin ]

The codec also converts to and from the BIO (CoNLL-style) token/tag
representation used for annotation exchange.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from typing import Iterable, TextIO

from .errors import InvalidTranscriptError, MalformedTagsError, UnknownTagError

__all__ = [
    "EntityLabel",
    "EntitySpan",
    "TaggedTranscript",
    "RepairEvent",
    "RepairKind",
    "OPENERS",
    "CLOSER",
    "TAG_SYMBOLS",
    "encode_inline",
    "decode_inline",
    "strip_tags",
    "to_bio",
    "from_bio",
    "read_bio",
    "write_bio",
]


class EntityLabel(str, enum.Enum):
    """The three entity categories. Every span carries exactly one."""

    PER = "PER"
    ORG = "ORG"
    LOC = "LOC"


OPENERS = {"{": EntityLabel.ORG, "[": EntityLabel.PER, "$": EntityLabel.LOC}
CLOSER = "]"
TAG_SYMBOLS = "{[$]"

_SYMBOL_SPLIT = re.compile(r"([{\[$\]])")
_STRIP_TABLE = str.maketrans("", "", TAG_SYMBOLS)
_OPENER_FOR = {label: sym for sym, label in OPENERS.items()}

_BIO_TAGS = {"O"} | {f"{p}-{lab.value}" for p in "BI" for lab in EntityLabel}


@dataclass(frozen=True)
class EntitySpan:
    """Typed token span; ``start`` inclusive, ``end`` exclusive.

    ``surface`` is the space-joined text of the covered tokens; it is
    stored explicitly so spans stay meaningful when detached from their
    transcript (entity inventories, triples).
    """

    label: EntityLabel
    start: int
    end: int
    surface: str


@dataclass(frozen=True)
class TaggedTranscript:
    """A token sequence plus non-overlapping, sorted entity spans.

    Construction validates all invariants and raises
    :class:`InvalidTranscriptError` on violation, so every instance in
    circulation is well-formed. Tokens are conventionally lowercase (the
    corpus pipeline lowercases upstream) but the codec itself is
    case-preserving.
    """

    tokens: tuple[str, ...]
    spans: tuple[EntitySpan, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "tokens", tuple(self.tokens))
        object.__setattr__(self, "spans", tuple(self.spans))
        for tok in self.tokens:
            if not tok or tok.split() != [tok]:
                raise InvalidTranscriptError(f"token {tok!r} is empty or contains whitespace")
            if any(sym in tok for sym in TAG_SYMBOLS):
                raise InvalidTranscriptError(f"token {tok!r} contains a tag symbol")
        prev_end = 0
        for span in self.spans:
            if not isinstance(span.label, EntityLabel):
                raise InvalidTranscriptError(f"bad label {span.label!r}")
            if not (0 <= span.start < span.end <= len(self.tokens)):
                raise InvalidTranscriptError(
                    f"span [{span.start}, {span.end}) out of range for {len(self.tokens)} tokens"
                )
            if span.start < prev_end:
                raise InvalidTranscriptError("spans overlap or are unsorted")
            expected = " ".join(self.tokens[span.start : span.end])
            if span.surface != expected:
                raise InvalidTranscriptError(
                    f"span surface {span.surface!r} does not match tokens {expected!r}"
                )
            prev_end = span.end

    @classmethod
    def build(
        cls, tokens: Iterable[str], spans: Iterable[tuple[EntityLabel, int, int]] = ()
    ) -> "TaggedTranscript":
        """Construct from (label, start, end) triples, deriving surfaces."""
        toks = tuple(tokens)
        made = [
            EntitySpan(label, start, end, " ".join(toks[start:end]))
            for label, start, end in spans
        ]
        made.sort(key=lambda s: s.start)
        return cls(toks, tuple(made))

    @property
    def text(self) -> str:
        return " ".join(self.tokens)


class RepairKind(str, enum.Enum):
    UNCLOSED_OPENER = "UNCLOSED_OPENER"
    ORPHAN_CLOSER = "ORPHAN_CLOSER"
    IMPLICIT_CLOSE_ON_OPENER = "IMPLICIT_CLOSE_ON_OPENER"


@dataclass(frozen=True)
class RepairEvent:
    """One fix applied by lenient decoding.

    ``position`` is the index of the triggering item in the decoder's
    symbol/token stream (whitespace tokens with glued tag symbols split
    out as standalone items).
    """

    kind: RepairKind
    position: int


def encode_inline(t: TaggedTranscript) -> str:
    """Serialize a transcript to the inline tag format.

    Each span contributes its opener symbol as a standalone token right
    before its first token and ``]`` right after its last token.
    """
    if not isinstance(t, TaggedTranscript):
        raise InvalidTranscriptError(f"expected TaggedTranscript, got {type(t).__name__}")
    out: list[str] = []
    span_iter = iter(t.spans)
    current = next(span_iter, None)
    open_until = None
    for i, tok in enumerate(t.tokens):
        if current is not None and current.start == i:
            out.append(_OPENER_FOR[current.label])
            open_until = current.end
            current = next(span_iter, None)
        out.append(tok)
        if open_until is not None and open_until == i + 1:
            out.append(CLOSER)
            open_until = None
    return " ".join(out)


def _split_symbols(raw: str) -> list[str]:
    """Whitespace-tokenize, then split glued tag symbols into standalone items."""
    items: list[str] = []
    for chunk in raw.split():
        for piece in _SYMBOL_SPLIT.split(chunk):
            if piece:
                items.append(piece)
    return items


def decode_inline(s: str, mode: str = "strict") -> tuple[TaggedTranscript, list[RepairEvent]]:
    """Parse an inline-tagged string back into a transcript.

    Tag symbols are recognized both as standalone tokens and glued to
    word characters (greedy model output need not preserve spacing).

    ``mode="strict"`` raises :class:`MalformedTagsError` on any
    malformation; ``mode="lenient"`` always succeeds, applying the repair
    policy (close unclosed spans at end of string, drop orphan closers,
    implicitly close an open span when a new opener arrives) and
    reporting one :class:`RepairEvent` per fix. Empty spans (opener
    immediately followed by closer) decode to no span in both modes.
    """
    if mode not in ("strict", "lenient"):
        raise ValueError(f"mode must be 'strict' or 'lenient', got {mode!r}")
    strict = mode == "strict"

    tokens: list[str] = []
    spans: list[tuple[EntityLabel, int, int]] = []
    events: list[RepairEvent] = []
    open_label: EntityLabel | None = None
    open_start = 0
    open_pos = 0

    def close_span(end: int) -> None:
        nonlocal open_label
        if open_label is not None and end > open_start:
            spans.append((open_label, open_start, end))
        open_label = None

    items = _split_symbols(s)
    for pos, item in enumerate(items):
        if item in OPENERS:
            if open_label is not None:
                if strict:
                    raise MalformedTagsError(f"opener {item!r} inside an open span at item {pos}")
                events.append(RepairEvent(RepairKind.IMPLICIT_CLOSE_ON_OPENER, pos))
                close_span(len(tokens))
            open_label = OPENERS[item]
            open_start = len(tokens)
            open_pos = pos
        elif item == CLOSER:
            if open_label is None:
                if strict:
                    raise MalformedTagsError(f"closer without open span at item {pos}")
                events.append(RepairEvent(RepairKind.ORPHAN_CLOSER, pos))
            else:
                close_span(len(tokens))
        else:
            tokens.append(item)

    if open_label is not None:
        if strict:
            raise MalformedTagsError("unclosed opener at end of string")
        events.append(RepairEvent(RepairKind.UNCLOSED_OPENER, open_pos))
        close_span(len(tokens))

    return TaggedTranscript.build(tokens, spans), events


def strip_tags(s: str) -> str:
    """Remove all four tag symbols and re-normalize whitespace."""
    return " ".join(s.translate(_STRIP_TABLE).split())


def to_bio(t: TaggedTranscript) -> list[tuple[str, str]]:
    """Project to BIO rows; one ``(token, tag)`` pair per token."""
    tags = ["O"] * len(t.tokens)
    for span in t.spans:
        tags[span.start] = f"B-{span.label.value}"
        for i in range(span.start + 1, span.end):
            tags[i] = f"I-{span.label.value}"
    return list(zip(t.tokens, tags))


def from_bio(rows: Iterable[tuple[str, str]]) -> TaggedTranscript:
    """Parse BIO rows into a transcript.

    An ``I-X`` that does not continue a span of label ``X`` is promoted
    to ``B-X`` (the usual CoNLL laxity). Tags outside the
    ``{O, B-PER, ..., I-LOC}`` alphabet raise :class:`UnknownTagError`.
    """
    tokens: list[str] = []
    spans: list[tuple[EntityLabel, int, int]] = []
    open_label: EntityLabel | None = None
    open_start = 0

    def close(end: int) -> None:
        nonlocal open_label
        if open_label is not None:
            spans.append((open_label, open_start, end))
        open_label = None

    for i, (token, tag) in enumerate(rows):
        if tag not in _BIO_TAGS:
            raise UnknownTagError(f"tag {tag!r} at row {i}")
        tokens.append(token)
        if tag == "O":
            close(i)
            continue
        prefix, _, name = tag.partition("-")
        label = EntityLabel(name)
        if prefix == "B" or label is not open_label:
            close(i)
            open_label = label
            open_start = i
    close(len(tokens))
    return TaggedTranscript.build(tokens, spans)


def write_bio(sentences: Iterable[list[tuple[str, str]]], fp: TextIO) -> None:
    """Write sentences in the two-column CoNLL layout, blank-line separated."""
    for rows in sentences:
        for token, tag in rows:
            fp.write(f"{token}\t{tag}\n")
        fp.write("\n")


def read_bio(fp: TextIO) -> list[list[tuple[str, str]]]:
    """Read a two-column CoNLL file; inverse of :func:`write_bio`."""
    sentences: list[list[tuple[str, str]]] = []
    rows: list[tuple[str, str]] = []
    for line in fp:
        line = line.rstrip("\n")
        if not line.strip():
            if rows:
                sentences.append(rows)
                rows = []
            continue
        token, sep, tag = line.partition("\t")
        if not sep:
            raise UnknownTagError(f"expected token<TAB>tag, got {line!r}")
        rows.append((token, tag))
    if rows:
        sentences.append(rows)
    return sentences

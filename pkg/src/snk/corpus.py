"""Utterance manifests: construction, cleaning, filtering, pseudo-annotation
merge, and corpus analytics (statistics and cross-corpus entity overlap).

Manifests are JSON Lines, one record per line with fields ``id``,
``audio_path``, ``duration_s``, ``lang``, ``text`` and optionally
``tagged_text``; unknown fields are preserved on round-trip.
"""

from __future__ import annotations

import enum
import json
import unicodedata
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Mapping, Sequence, TextIO

from . import tagcodec
from .audio import audio_stddev
from .errors import (
    EmptyInventoryError,
    FormatError,
    InvalidRecordError,
    SnkError,
    TokenMismatchError,
    UnknownIdError,
)
from .tables import Table, format_ratio
from .tagcodec import EntityLabel, TaggedTranscript, encode_inline, from_bio, strip_tags

__all__ = [
    "Lang",
    "UtteranceRecord",
    "CleaningConfig",
    "DEFAULT_TRANSLIT_TABLE",
    "CorpusStats",
    "EntityInventory",
    "clean_text",
    "filter_corpus",
    "merge_annotations",
    "compute_stats",
    "entity_inventory",
    "overlap_pct",
    "overlap_matrix",
    "read_manifest",
    "write_manifest",
    "read_bio_annotations",
    "write_bio_annotations",
]


class Lang(str, enum.Enum):
    EN = "EN"
    DE = "DE"
    NL = "NL"


_KNOWN_FIELDS = ("id", "audio_path", "duration_s", "lang", "text", "tagged_text")


@dataclass(frozen=True)
class UtteranceRecord:
    """One manifest row. ``extra`` holds unknown JSON fields verbatim."""

    id: str
    audio_path: str
    duration_s: float
    lang: Lang
    text: str
    tagged_text: str | None = None
    extra: Mapping[str, object] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.id:
            raise InvalidRecordError("empty id")
        if not isinstance(self.lang, Lang):
            try:
                object.__setattr__(self, "lang", Lang(self.lang))
            except ValueError:
                raise InvalidRecordError(f"{self.id}: unknown lang {self.lang!r}") from None
        if self.duration_s < 0:
            raise InvalidRecordError(f"{self.id}: negative duration")
        if self.tagged_text is not None and strip_tags(self.tagged_text) != self.text:
            raise InvalidRecordError(
                f"{self.id}: tagged_text does not strip to text "
                f"({strip_tags(self.tagged_text)!r} != {self.text!r})"
            )

    def transcript(self) -> TaggedTranscript:
        """Structured view; untagged records yield span-free transcripts."""
        if self.tagged_text is None:
            return TaggedTranscript.build(self.text.split())
        return tagcodec.decode_inline(self.tagged_text, "strict")[0]


# Minimal Cyrillic romanization, enough for fixtures and smoke tests;
# production tables arrive as user-supplied JSON files.
_CYRILLIC = {
    "а": "a", "б": "b", "в": "v", "г": "g", "д": "d", "е": "e", "ж": "zh",
    "з": "z", "и": "i", "й": "i", "к": "k", "л": "l", "м": "m", "н": "n",
    "о": "o", "п": "p", "р": "r", "с": "s", "т": "t", "у": "u", "ф": "f",
    "х": "kh", "ц": "ts", "ч": "ch", "ш": "sh", "щ": "shch", "ъ": "",
    "ы": "y", "ь": "", "э": "e", "ю": "yu", "я": "ya",
}
DEFAULT_TRANSLIT_TABLE: Mapping[str, str] = {
    **_CYRILLIC,
    **{key.upper(): value for key, value in _CYRILLIC.items()},
}


@dataclass(frozen=True)
class CleaningConfig:
    """Text/audio cleaning knobs. Apostrophes survive only for English."""

    lang: Lang = Lang.EN
    stddev_threshold: float = 0.001
    keep_apostrophes: bool | None = None
    translit_table: Mapping[str, str] | None = None

    def __post_init__(self) -> None:
        if not isinstance(self.lang, Lang):
            object.__setattr__(self, "lang", Lang(self.lang))
        if self.stddev_threshold < 0:
            raise InvalidRecordError("stddev_threshold must be >= 0")
        if self.keep_apostrophes is None:
            object.__setattr__(self, "keep_apostrophes", self.lang is Lang.EN)


def clean_text(raw: str, cfg: CleaningConfig) -> str:
    """Normalize raw transcript text.

    Order: transliteration (longest match, left to right), punctuation
    and tag-symbol removal (U+0027 apostrophe survives when configured),
    whitespace normalization, lowercasing. Total and idempotent for any
    transliteration table whose outputs contain no table keys.
    """
    text = raw
    if cfg.translit_table:
        text = _transliterate(text, cfg.translit_table)
    kept: list[str] = []
    for ch in text:
        if ch == "'" and cfg.keep_apostrophes:
            kept.append(ch)
        elif ch in tagcodec.TAG_SYMBOLS or unicodedata.category(ch).startswith("P"):
            continue
        else:
            kept.append(ch)
    return " ".join("".join(kept).split()).lower()


def _transliterate(text: str, table: Mapping[str, str]) -> str:
    keys_by_len = sorted(table, key=len, reverse=True)
    out: list[str] = []
    i = 0
    while i < len(text):
        for key in keys_by_len:
            if key and text.startswith(key, i):
                out.append(table[key])
                i += len(key)
                break
        else:
            out.append(text[i])
            i += 1
    return "".join(out)


AudioReader = Callable[[str], Sequence[float]]

REASON_DUPLICATE = "DUPLICATE_TEXT"
REASON_LOW_STDDEV = "LOW_STDDEV"
REASON_READ_FAILED = "AUDIO_READ_FAILED"


def filter_corpus(
    records: Sequence[UtteranceRecord],
    cfg: CleaningConfig,
    audio_reader: AudioReader,
    jobs: int = 1,
) -> tuple[list[UtteranceRecord], list[tuple[UtteranceRecord, str]]]:
    """Partition records into (kept, rejected-with-reason).

    A record is rejected when its cleaned text duplicates an earlier
    *kept* record's cleaned text (first occurrence wins), when its audio
    cannot be read, or when the audio's standard deviation is at or
    below ``cfg.stddev_threshold``. Input order is preserved on both
    sides. Audio reads may run in parallel (``jobs``); the dedup fold is
    sequential by contract.
    """

    def measure(rec: UtteranceRecord):
        try:
            return audio_stddev(audio_reader(rec.audio_path)), None
        except SnkError as exc:
            return None, str(exc)
        except Exception as exc:  # reader is pluggable; never fatal
            return None, f"{REASON_READ_FAILED}: {exc}"

    measured: list[tuple[float | None, str | None]] | None = None
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            measured = list(pool.map(measure, records))

    kept: list[UtteranceRecord] = []
    rejected: list[tuple[UtteranceRecord, str]] = []
    seen: set[str] = set()
    for i, rec in enumerate(records):
        cleaned = clean_text(rec.text, cfg)
        if cleaned in seen:
            rejected.append((rec, REASON_DUPLICATE))
            continue
        stddev, error = measured[i] if measured is not None else measure(rec)
        if error is not None:
            rejected.append((rec, REASON_READ_FAILED))
        elif stddev <= cfg.stddev_threshold:
            rejected.append((rec, REASON_LOW_STDDEV))
        else:
            kept.append(rec)
            seen.add(cleaned)
    return kept, rejected


def merge_annotations(
    records: Sequence[UtteranceRecord],
    annotations: Mapping[str, list[tuple[str, str]]],
) -> list[UtteranceRecord]:
    """Attach BIO pseudo-annotations to their records.

    Every annotation id must name a record and its token column must
    equal the record's whitespace-tokenized text; matched records gain an
    inline ``tagged_text``, others pass through unchanged.
    """
    by_id = {rec.id: rec for rec in records}
    for ann_id in annotations:
        if ann_id not in by_id:
            raise UnknownIdError(ann_id)
    out: list[UtteranceRecord] = []
    for rec in records:
        rows = annotations.get(rec.id)
        if rows is None:
            out.append(rec)
            continue
        tokens = [token for token, _ in rows]
        if tokens != rec.text.split():
            raise TokenMismatchError(
                f"{rec.id}: annotation tokens {tokens!r} != text tokens {rec.text.split()!r}"
            )
        tagged = encode_inline(from_bio(rows))
        out.append(replace(rec, tagged_text=tagged))
    return out


@dataclass(frozen=True)
class CorpusStats:
    n_sentences: int
    n_tokens: int
    n_tokens_per_label: Mapping[EntityLabel, int]
    n_tokens_o: int
    total_hours: float

    def to_table(self) -> Table:
        header = ("n_sentences", "n_tokens", "n_tokens_loc", "n_tokens_org",
                  "n_tokens_per", "n_tokens_o", "total_hours")
        row = (
            str(self.n_sentences),
            str(self.n_tokens),
            str(self.n_tokens_per_label[EntityLabel.LOC]),
            str(self.n_tokens_per_label[EntityLabel.ORG]),
            str(self.n_tokens_per_label[EntityLabel.PER]),
            str(self.n_tokens_o),
            format_ratio(self.total_hours),
        )
        return Table(header, (row,))


def compute_stats(records: Sequence[UtteranceRecord]) -> CorpusStats:
    """Manifest-level counts in the shape of the corpus statistics table.

    Records without ``tagged_text`` contribute all their tokens as O.
    """
    n_tokens = 0
    per_label = {label: 0 for label in EntityLabel}
    hours = 0.0
    for rec in records:
        n_tokens += len(rec.text.split())
        hours += rec.duration_s / 3600.0
        if rec.tagged_text is not None:
            for span in rec.transcript().spans:
                per_label[span.label] += span.end - span.start
    n_entity_tokens = sum(per_label.values())
    return CorpusStats(
        n_sentences=len(records),
        n_tokens=n_tokens,
        n_tokens_per_label=per_label,
        n_tokens_o=n_tokens - n_entity_tokens,
        total_hours=hours,
    )


EntityInventory = frozenset  # of (surface, EntityLabel) pairs


def entity_inventory(records: Sequence[UtteranceRecord]) -> EntityInventory:
    """Distinct lowercase (surface, label) pairs over all tagged records."""
    pairs: set[tuple[str, EntityLabel]] = set()
    for rec in records:
        if rec.tagged_text is None:
            continue
        for span in rec.transcript().spans:
            pairs.add((span.surface.lower(), span.label))
    return frozenset(pairs)


def overlap_pct(a: EntityInventory, b: EntityInventory) -> float:
    """Share of ``a``'s inventory also present in ``b``, in percent.

    Asymmetric by construction: the denominator is ``|a|``.
    """
    if not a:
        raise EmptyInventoryError("left inventory is empty")
    return 100.0 * len(a & b) / len(a)


def overlap_matrix(
    corpora: Mapping[str, EntityInventory],
    rows: Sequence[str] | None = None,
    cols: Sequence[str] | None = None,
) -> Table:
    """Pairwise overlap percentages as a labeled table (rows → cols)."""
    rows = list(rows) if rows is not None else list(corpora)
    cols = list(cols) if cols is not None else list(corpora)
    for name in (*rows, *cols):
        if name not in corpora:
            raise EmptyInventoryError(f"no inventory named {name!r}")
    body = tuple(
        (r, *(format_ratio(overlap_pct(corpora[r], corpora[c])) for c in cols))
        for r in rows
    )
    return Table(("corpus", *cols), body)


# ---------------------------------------------------------------------------
# File formats
# ---------------------------------------------------------------------------

def read_manifest(fp: TextIO) -> list[UtteranceRecord]:
    records = []
    ids = set()
    for lineno, line in enumerate(fp, 1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise FormatError(f"manifest line {lineno}: {exc}") from exc
        if not isinstance(obj, dict):
            raise FormatError(f"manifest line {lineno}: expected an object")
        try:
            rec = UtteranceRecord(
                id=obj.get("id", ""),
                audio_path=obj.get("audio_path", ""),
                duration_s=float(obj.get("duration_s", 0.0)),
                lang=obj.get("lang", ""),
                text=obj.get("text", ""),
                tagged_text=obj.get("tagged_text"),
                extra={k: v for k, v in obj.items() if k not in _KNOWN_FIELDS},
            )
        except (TypeError, ValueError) as exc:
            raise FormatError(f"manifest line {lineno}: {exc}") from exc
        if rec.id in ids:
            raise FormatError(f"manifest line {lineno}: duplicate id {rec.id!r}")
        ids.add(rec.id)
        records.append(rec)
    return records


def write_manifest(records: Iterable[UtteranceRecord], fp: TextIO) -> None:
    for rec in records:
        obj: dict[str, object] = {
            "id": rec.id,
            "audio_path": rec.audio_path,
            "duration_s": rec.duration_s,
            "lang": rec.lang.value,
            "text": rec.text,
        }
        if rec.tagged_text is not None:
            obj["tagged_text"] = rec.tagged_text
        for key in sorted(rec.extra):
            obj[key] = rec.extra[key]
        fp.write(json.dumps(obj, ensure_ascii=False) + "\n")


def read_bio_annotations(fp: TextIO) -> dict[str, list[tuple[str, str]]]:
    """Read an id-keyed BIO file (``# id: <id>`` before each block)."""
    annotations: dict[str, list[tuple[str, str]]] = {}
    current_id: str | None = None
    rows: list[tuple[str, str]] = []

    def flush() -> None:
        nonlocal current_id, rows
        if current_id is not None:
            if current_id in annotations:
                raise FormatError(f"duplicate annotation id {current_id!r}")
            annotations[current_id] = rows
        elif rows:
            raise FormatError("BIO block without a preceding '# id:' line")
        current_id, rows = None, []

    for line in fp:
        line = line.rstrip("\n")
        if line.startswith("# id:"):
            flush()
            current_id = line[len("# id:"):].strip()
        elif not line.strip():
            flush()
        else:
            token, sep, tag = line.partition("\t")
            if not sep:
                raise FormatError(f"expected token<TAB>tag, got {line!r}")
            rows.append((token, tag))
    flush()
    return annotations


def write_bio_annotations(annotations: Mapping[str, list[tuple[str, str]]], fp: TextIO) -> None:
    for ann_id, rows in annotations.items():
        fp.write(f"# id: {ann_id}\n")
        for token, tag in rows:
            fp.write(f"{token}\t{tag}\n")
        fp.write("\n")

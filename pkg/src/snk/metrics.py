"""Transcript scoring: word error rate over a minimum-edit alignment,
entity error rate (fraction of reference entities not transcribed
verbatim), and micro-F1 over (surface, label, occurrence) triples.

Pipeline and end-to-end hypotheses share one code path: tagged
hypotheses are compared span-wise, and their plain token sequences feed
WER/EER, so a single :func:`f1_micro` call yields the full report.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

from .errors import EmptyReferenceError, LengthMismatchError, NoEntitiesError
from .tables import Table, format_ratio
from .tagcodec import EntityLabel, EntitySpan, TaggedTranscript

__all__ = [
    "MATCH",
    "SUB",
    "DEL",
    "INS",
    "AlignmentOp",
    "AlignmentPath",
    "align",
    "wer",
    "entity_correctly_transcribed",
    "eer",
    "EntityTriple",
    "entity_triples",
    "LabelScore",
    "EvalCounts",
    "EvalReport",
    "f1_micro",
]

MATCH = "MATCH"
SUB = "SUB"
DEL = "DEL"
INS = "INS"


@dataclass(frozen=True)
class AlignmentOp:
    """One edit step. MATCH/SUB carry both indices, DEL only ``ref_index``,
    INS only ``hyp_index``."""

    kind: str
    ref_index: int | None = None
    hyp_index: int | None = None


@dataclass(frozen=True)
class AlignmentPath:
    ops: tuple[AlignmentOp, ...]
    cost: int


def align(ref_tokens: Sequence[str], hyp_tokens: Sequence[str]) -> AlignmentPath:
    """Minimum-edit alignment with unit costs.

    Backtrace tie-break on equal cost: MATCH, then SUB, then DEL, then
    INS, making the returned path deterministic.
    """
    n, m = len(ref_tokens), len(hyp_tokens)
    dist = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(1, n + 1):
        dist[i][0] = i
    for j in range(1, m + 1):
        dist[0][j] = j
    for i in range(1, n + 1):
        row, prev = dist[i], dist[i - 1]
        ref_tok = ref_tokens[i - 1]
        for j in range(1, m + 1):
            diag = prev[j - 1] + (ref_tok != hyp_tokens[j - 1])
            row[j] = min(diag, prev[j] + 1, row[j - 1] + 1)

    ops: list[AlignmentOp] = []
    i, j = n, m
    while i > 0 or j > 0:
        here = dist[i][j]
        if i > 0 and j > 0 and ref_tokens[i - 1] == hyp_tokens[j - 1] and here == dist[i - 1][j - 1]:
            ops.append(AlignmentOp(MATCH, i - 1, j - 1))
            i, j = i - 1, j - 1
        elif i > 0 and j > 0 and ref_tokens[i - 1] != hyp_tokens[j - 1] and here == dist[i - 1][j - 1] + 1:
            ops.append(AlignmentOp(SUB, i - 1, j - 1))
            i, j = i - 1, j - 1
        elif i > 0 and here == dist[i - 1][j] + 1:
            ops.append(AlignmentOp(DEL, ref_index=i - 1))
            i -= 1
        else:
            ops.append(AlignmentOp(INS, hyp_index=j - 1))
            j -= 1
    ops.reverse()
    return AlignmentPath(tuple(ops), dist[n][m])


def wer(pairs: Sequence[tuple[Sequence[str], Sequence[str]]]) -> float:
    """Corpus-level (S + D + I) / N over pooled counts, not a per-utterance
    average."""
    edits = 0
    n_ref = 0
    for ref, hyp in pairs:
        edits += align(ref, hyp).cost
        n_ref += len(ref)
    if n_ref == 0:
        raise EmptyReferenceError("no reference tokens")
    return edits / n_ref


def entity_correctly_transcribed(
    ref: TaggedTranscript, span: EntitySpan, path: AlignmentPath
) -> bool:
    """Whether a reference span came through the hypothesis verbatim.

    True iff every span token is a MATCH and no insertion falls strictly
    between the span's first and last aligned hypothesis positions. For
    isolated entities this reduces to exact string match.
    """
    matched_hyp: dict[int, int] = {}
    for op in path.ops:
        if op.kind == MATCH:
            matched_hyp[op.ref_index] = op.hyp_index
    hyp_positions = []
    for r in range(span.start, span.end):
        if r not in matched_hyp:
            return False
        hyp_positions.append(matched_hyp[r])
    lo, hi = hyp_positions[0], hyp_positions[-1]
    return not any(op.kind == INS and lo < op.hyp_index < hi for op in path.ops)


def eer(refs: Sequence[TaggedTranscript], hyps: Sequence[Sequence[str]]) -> float:
    """Pooled fraction of reference entities transcribed incorrectly."""
    if len(refs) != len(hyps):
        raise LengthMismatchError(f"{len(refs)} references vs {len(hyps)} hypotheses")
    total = 0
    incorrect = 0
    for ref, hyp_tokens in zip(refs, hyps):
        path = align(ref.tokens, hyp_tokens)
        for span in ref.spans:
            total += 1
            incorrect += not entity_correctly_transcribed(ref, span, path)
    if total == 0:
        raise NoEntitiesError("references contain no entity spans")
    return incorrect / total


@dataclass(frozen=True)
class EntityTriple:
    """Matching unit for micro-F1. ``occurrence_index`` is the 1-based rank
    of this (surface, label) pair within its utterance, left to right."""

    surface: str
    label: EntityLabel
    occurrence_index: int


def entity_triples(t: TaggedTranscript) -> list[EntityTriple]:
    seen: dict[tuple[str, EntityLabel], int] = {}
    triples = []
    for span in t.spans:
        key = (span.surface, span.label)
        seen[key] = seen.get(key, 0) + 1
        triples.append(EntityTriple(span.surface, span.label, seen[key]))
    return triples


@dataclass(frozen=True)
class LabelScore:
    tp: int
    fp: int
    fn: int

    @property
    def precision(self) -> float:
        return self.tp / (self.tp + self.fp) if self.tp + self.fp else 0.0

    @property
    def recall(self) -> float:
        return self.tp / (self.tp + self.fn) if self.tp + self.fn else 0.0

    @property
    def f1(self) -> float:
        denom = self.tp + 0.5 * (self.fp + self.fn)
        return self.tp / denom if denom else 0.0


@dataclass(frozen=True)
class EvalCounts:
    n_ref_tokens: int
    n_sub: int
    n_del: int
    n_ins: int
    n_entities: int
    n_entities_incorrect: int
    tp: int
    fp: int
    fn: int


@dataclass(frozen=True)
class EvalReport:
    """Complete scoring result; ``wer``/``eer`` are None when undefined
    (no reference tokens / no reference entities)."""

    wer: float | None
    eer: float | None
    f1: float
    precision: float
    recall: float
    per_label: Mapping[EntityLabel, LabelScore]
    counts: EvalCounts
    n_repairs: int = 0

    def to_json_dict(self) -> dict:
        def ratio(x):
            return None if x is None else float(format_ratio(x))

        return {
            "wer": ratio(self.wer),
            "eer": ratio(self.eer),
            "f1": ratio(self.f1),
            "precision": ratio(self.precision),
            "recall": ratio(self.recall),
            "per_label": {
                label.value: {"tp": s.tp, "fp": s.fp, "fn": s.fn, "f1": ratio(s.f1)}
                for label, s in self.per_label.items()
            },
            "counts": vars(self.counts).copy(),
            "n_repairs": self.n_repairs,
        }

    def to_table(self) -> Table:
        def cell(x):
            return format_ratio(x) if x is not None else "N/A"

        return Table(("wer", "eer", "f1"), ((cell(self.wer), cell(self.eer), cell(self.f1)),))


def f1_micro(
    refs: Sequence[TaggedTranscript], hyps: Sequence[TaggedTranscript]
) -> EvalReport:
    """Score tagged hypotheses against tagged references.

    Per utterance, TP counts exact triple matches; FP/FN are the
    leftovers on each side. Pooled corpus-wide, with a per-label
    breakdown, plus WER and EER computed from the transcripts' token
    sequences (None when their denominators are empty).
    """
    if len(refs) != len(hyps):
        raise LengthMismatchError(f"{len(refs)} references vs {len(hyps)} hypotheses")

    by_label = {label: [0, 0, 0] for label in EntityLabel}  # tp, fp, fn
    n_sub = n_del = n_ins = 0
    n_ref_tokens = 0
    n_entities = 0
    n_incorrect = 0
    for ref, hyp in zip(refs, hyps):
        ref_triples = set(entity_triples(ref))
        hyp_triples = set(entity_triples(hyp))
        for label in EntityLabel:
            r = {t for t in ref_triples if t.label is label}
            h = {t for t in hyp_triples if t.label is label}
            tp = len(r & h)
            by_label[label][0] += tp
            by_label[label][1] += len(h) - tp
            by_label[label][2] += len(r) - tp

        path = align(ref.tokens, hyp.tokens)
        n_ref_tokens += len(ref.tokens)
        for op in path.ops:
            n_sub += op.kind == SUB
            n_del += op.kind == DEL
            n_ins += op.kind == INS
        for span in ref.spans:
            n_entities += 1
            n_incorrect += not entity_correctly_transcribed(ref, span, path)

    per_label = {label: LabelScore(*cnt) for label, cnt in by_label.items()}
    tp = sum(s.tp for s in per_label.values())
    fp = sum(s.fp for s in per_label.values())
    fn = sum(s.fn for s in per_label.values())
    pooled = LabelScore(tp, fp, fn)
    counts = EvalCounts(
        n_ref_tokens=n_ref_tokens,
        n_sub=n_sub,
        n_del=n_del,
        n_ins=n_ins,
        n_entities=n_entities,
        n_entities_incorrect=n_incorrect,
        tp=tp,
        fp=fp,
        fn=fn,
    )
    return EvalReport(
        wer=(n_sub + n_del + n_ins) / n_ref_tokens if n_ref_tokens else None,
        eer=n_incorrect / n_entities if n_entities else None,
        f1=pooled.f1,
        precision=pooled.precision,
        recall=pooled.recall,
        per_label=per_label,
        counts=counts,
    )

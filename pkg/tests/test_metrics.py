import random

import pytest

from snk.errors import EmptyReferenceError, LengthMismatchError, NoEntitiesError
from snk.metrics import (
    DEL,
    INS,
    MATCH,
    SUB,
    align,
    eer,
    entity_correctly_transcribed,
    entity_triples,
    f1_micro,
    wer,
)
from snk.tagcodec import EntityLabel, TaggedTranscript
from conftest import random_transcript

PER, ORG, LOC = EntityLabel.PER, EntityLabel.ORG, EntityLabel.LOC


def naive_edit_distance(ref, hyp):
    """Rolling-row Levenshtein, independent of the aligner."""
    prev = list(range(len(hyp) + 1))
    for i, r in enumerate(ref, 1):
        cur = [i]
        for j, h in enumerate(hyp, 1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (r != h)))
        prev = cur
    return prev[-1]


def random_tokens(rng, lo=0, hi=8):
    return [rng.choice("abcde") for _ in range(rng.randint(lo, hi))]


class TestAlign:
    def test_identity(self):
        path = align(["a", "b"], ["a", "b"])
        assert [op.kind for op in path.ops] == [MATCH, MATCH]
        assert path.cost == 0

    def test_single_substitution(self):
        path = align(["a", "b", "c"], ["a", "x", "c"])
        assert path.cost == 1
        subs = [op for op in path.ops if op.kind == SUB]
        assert [(op.ref_index, op.hyp_index) for op in subs] == [(1, 1)]

    def test_deletion_only(self):
        path = align(["a"], [])
        assert [op.kind for op in path.ops] == [DEL]
        assert path.cost == 1

    def test_insertion_only(self):
        path = align([], ["a"])
        assert [op.kind for op in path.ops] == [INS]

    def test_index_bookkeeping(self):
        rng = random.Random(21)
        for _ in range(300):
            ref, hyp = random_tokens(rng), random_tokens(rng)
            path = align(ref, hyp)
            ref_seq = [op.ref_index for op in path.ops if op.kind in (MATCH, SUB, DEL)]
            hyp_seq = [op.hyp_index for op in path.ops if op.kind in (MATCH, SUB, INS)]
            assert ref_seq == list(range(len(ref)))
            assert hyp_seq == list(range(len(hyp)))

    def test_cost_equals_levenshtein(self):
        rng = random.Random(22)
        for _ in range(500):
            ref, hyp = random_tokens(rng), random_tokens(rng)
            assert align(ref, hyp).cost == naive_edit_distance(ref, hyp)


class TestWer:
    def test_identical_corpus(self):
        assert wer([(["a", "b"], ["a", "b"])]) == 0.0

    def test_single_sub(self):
        assert wer([(["a", "b", "c"], ["a", "x", "c"])]) == pytest.approx(1 / 3)

    def test_pooled_not_averaged(self):
        pairs = [(["a"] * 9, ["a"] * 9), (["b"], ["x"])]
        assert wer(pairs) == pytest.approx(0.1)  # 1 error over 10 tokens

    def test_empty_reference_raises(self):
        with pytest.raises(EmptyReferenceError):
            wer([([], ["x"])])

    def test_matches_oracle_on_random_corpora(self):
        rng = random.Random(23)
        for _ in range(300):
            pairs = [(random_tokens(rng), random_tokens(rng)) for _ in range(rng.randint(1, 5))]
            n_ref = sum(len(r) for r, _ in pairs)
            if n_ref == 0:
                continue
            expected = sum(naive_edit_distance(r, h) for r, h in pairs) / n_ref
            assert wer(pairs) == pytest.approx(expected, abs=1e-12)


class TestEntityCorrectlyTranscribed:
    def setup_method(self):
        self.ref = TaggedTranscript.build(
            ["he", "met", "john", "smith", "today"], [(PER, 2, 4)]
        )
        self.span = self.ref.spans[0]

    def test_perfect_hypothesis(self):
        path = align(self.ref.tokens, list(self.ref.tokens))
        assert entity_correctly_transcribed(self.ref, self.span, path)

    def test_substituted_span_token(self):
        path = align(self.ref.tokens, ["he", "met", "jon", "smith", "today"])
        assert not entity_correctly_transcribed(self.ref, self.span, path)

    def test_insertion_inside_span(self):
        path = align(self.ref.tokens, ["he", "met", "john", "x", "smith", "today"])
        assert not entity_correctly_transcribed(self.ref, self.span, path)

    def test_insertion_outside_span_ok(self):
        path = align(self.ref.tokens, ["uh", "he", "met", "john", "smith", "today"])
        assert entity_correctly_transcribed(self.ref, self.span, path)

    def test_context_error_does_not_matter(self):
        path = align(self.ref.tokens, ["she", "met", "john", "smith", "now"])
        assert entity_correctly_transcribed(self.ref, self.span, path)


class TestEer:
    def test_perfect(self):
        refs = [TaggedTranscript.build(["a", "b"], [(PER, 0, 1)])]
        assert eer(refs, [["a", "b"]]) == 0.0

    def test_half_wrong(self):
        refs = [
            TaggedTranscript.build(["john", "spoke"], [(PER, 0, 1)]),
            TaggedTranscript.build(["berlin", "rocks"], [(LOC, 0, 1)]),
        ]
        hyps = [["jon", "spoke"], ["berlin", "rocks"]]
        assert eer(refs, hyps) == 0.5

    def test_no_entities_raises(self):
        with pytest.raises(NoEntitiesError):
            eer([TaggedTranscript.build(["a"])], [["a"]])

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatchError):
            eer([], [["a"]])

    def test_hand_labeled_fixture(self):
        # 10 entities across 6 utterances; exactly 3 perturbed -> 0.3
        refs = [
            TaggedTranscript.build(["john", "met", "mary"], [(PER, 0, 1), (PER, 2, 3)]),
            TaggedTranscript.build(["acme", "hired", "bob"], [(ORG, 0, 1), (PER, 2, 3)]),
            TaggedTranscript.build(["visit", "berlin", "and", "paris"], [(LOC, 1, 2), (LOC, 3, 4)]),
            TaggedTranscript.build(["ibm", "and", "sap", "merge"], [(ORG, 0, 1), (ORG, 2, 3)]),
            TaggedTranscript.build(["alice", "travels"], [(PER, 0, 1)]),
            TaggedTranscript.build(["to", "rome"], [(LOC, 1, 2)]),
        ]
        hyps = [
            ["john", "met", "mary"],          # both fine
            ["acne", "hired", "bob"],         # acme perturbed (1)
            ["visit", "berlin", "and", "pairs"],  # paris perturbed (2)
            ["ibm", "and", "sap", "merge"],   # both fine
            ["alys", "travels"],              # alice perturbed (3)
            ["to", "rome"],                   # fine
        ]
        assert sum(len(r.spans) for r in refs) == 10
        assert eer(refs, hyps) == pytest.approx(0.3)


class TestTriples:
    def test_empty(self):
        assert entity_triples(TaggedTranscript.build(["a"])) == []

    def test_repeated_pair_gets_indices(self):
        t = TaggedTranscript.build(
            ["john", "saw", "john"], [(PER, 0, 1), (PER, 2, 3)]
        )
        assert [(x.surface, x.occurrence_index) for x in entity_triples(t)] == [
            ("john", 1),
            ("john", 2),
        ]

    def test_same_surface_different_label(self):
        t = TaggedTranscript.build(
            ["john", "saw", "john"], [(PER, 0, 1), (LOC, 2, 3)]
        )
        assert [x.occurrence_index for x in entity_triples(t)] == [1, 1]


def oracle_triple_counts(ref, hyp):
    """Brute force: enumerate both triple lists and greedily match equal ones."""
    ref_triples = list(entity_triples(ref))
    hyp_triples = list(entity_triples(hyp))
    used = [False] * len(ref_triples)
    tp = 0
    for h in hyp_triples:
        for i, r in enumerate(ref_triples):
            if not used[i] and r == h:
                used[i] = True
                tp += 1
                break
    return tp, len(hyp_triples) - tp, len(ref_triples) - tp


class TestF1Micro:
    def test_identical(self):
        t = TaggedTranscript.build(["john", "runs"], [(PER, 0, 1)])
        report = f1_micro([t], [t])
        assert report.precision == report.recall == report.f1 == 1.0
        assert report.wer == 0.0 and report.eer == 0.0

    def test_missing_entity(self):
        ref = TaggedTranscript.build(["john", "runs"], [(PER, 0, 1)])
        hyp = TaggedTranscript.build(["john", "runs"])
        report = f1_micro([ref], [hyp])
        assert (report.counts.tp, report.counts.fp, report.counts.fn) == (0, 0, 1)
        assert report.f1 == 0.0

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatchError):
            f1_micro([], [TaggedTranscript.build(["a"])])

    def test_counts_match_oracle(self):
        rng = random.Random(24)
        for _ in range(400):
            n = rng.randint(1, 5)
            refs = [random_transcript(rng, max_tokens=6) for _ in range(n)]
            hyps = [random_transcript(rng, max_tokens=6) for _ in range(n)]
            report = f1_micro(refs, hyps)
            tp = fp = fn = 0
            for r, h in zip(refs, hyps):
                a, b, c = oracle_triple_counts(r, h)
                tp, fp, fn = tp + a, fp + b, fn + c
            assert (report.counts.tp, report.counts.fp, report.counts.fn) == (tp, fp, fn)
            denom = tp + 0.5 * (fp + fn)
            assert report.f1 == pytest.approx(tp / denom if denom else 0.0)

    def test_swap_swaps_precision_recall(self):
        rng = random.Random(25)
        for _ in range(100):
            refs = [random_transcript(rng, max_tokens=6) for _ in range(3)]
            hyps = [random_transcript(rng, max_tokens=6) for _ in range(3)]
            fwd = f1_micro(refs, hyps)
            rev = f1_micro(hyps, refs)
            assert fwd.precision == pytest.approx(rev.recall)
            assert fwd.recall == pytest.approx(rev.precision)
            assert fwd.f1 == pytest.approx(rev.f1)

    def test_per_label_sums_to_pooled(self):
        rng = random.Random(26)
        for _ in range(100):
            refs = [random_transcript(rng) for _ in range(4)]
            hyps = [random_transcript(rng) for _ in range(4)]
            report = f1_micro(refs, hyps)
            assert sum(s.tp for s in report.per_label.values()) == report.counts.tp
            assert sum(s.fp for s in report.per_label.values()) == report.counts.fp
            assert sum(s.fn for s in report.per_label.values()) == report.counts.fn


class TestCorruptionMonotonicity:
    """Corrupting additional entity spans never decreases EER or increases F1."""

    @staticmethod
    def corrupted(refs, n_corrupt):
        hyps = []
        budget = n_corrupt
        for ref in refs:
            tokens = list(ref.tokens)
            spans = []
            for span in ref.spans:
                if budget > 0:
                    tokens[span.start] = "zzz" + tokens[span.start]
                    budget -= 1
                spans.append((span.label, span.start, span.end))
            hyps.append(TaggedTranscript.build(tokens, spans))
        return hyps

    def test_monotone(self):
        rng = random.Random(27)
        refs = []
        while sum(len(r.spans) for r in refs) < 10:
            t = random_transcript(rng, max_tokens=8)
            if t.spans:
                refs.append(t)
        total = sum(len(r.spans) for r in refs)
        eers, f1s = [], []
        for k in range(total + 1):
            hyps = self.corrupted(refs, k)
            eers.append(eer(refs, [list(h.tokens) for h in hyps]))
            f1s.append(f1_micro(refs, hyps).f1)
        assert all(a <= b for a, b in zip(eers, eers[1:]))
        assert all(a >= b for a, b in zip(f1s, f1s[1:]))
        assert eers[0] == 0.0 and eers[-1] == 1.0

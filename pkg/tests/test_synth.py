import numpy as np
import pytest

from snk.corpus import read_manifest
from snk.errors import MissingCorpusError
from snk.synth import (
    Lexicon,
    SynthSpec,
    disjoint_world,
    load_synth_corpus,
    make_dataset,
    overlapping_world,
    synth_generate,
    world_by_name,
    write_synth_corpus,
)
from snk.tagcodec import EntityLabel, decode_inline, strip_tags


class TestGeneration:
    def test_empty(self):
        assert synth_generate(overlapping_world(), "DE", 0, 1) == []

    def test_bitwise_determinism(self):
        spec = overlapping_world()
        a = synth_generate(spec, "NL", 20, seed=9)
        b = synth_generate(spec, "NL", 20, seed=9)
        assert [t for _, t in a] == [t for _, t in b]
        for (fa, _), (fb, _) in zip(a, b):
            assert fa.tobytes() == fb.tobytes()

    def test_different_seeds_differ(self):
        spec = overlapping_world()
        a = synth_generate(spec, "DE", 10, seed=1)
        b = synth_generate(spec, "DE", 10, seed=2)
        assert [t for _, t in a] != [t for _, t in b]

    def test_targets_parse_strict(self):
        for _, tagged in synth_generate(overlapping_world(), "DE", 50, seed=3):
            transcript, events = decode_inline(tagged, "strict")
            assert events == []
            assert strip_tags(tagged) == transcript.text

    def test_noise_free_single_frames_are_one_hots(self):
        spec = SynthSpec(
            lexicons=overlapping_world().lexicons,
            frames_per_symbol=(1, 1),
            noise_sigma=0.0,
        )
        frames, tagged = synth_generate(spec, "DE", 1, seed=4)[0]
        ids = spec.vocab.encode(tagged)
        assert frames.shape == (len(ids), spec.feature_dim)
        for row, sym in zip(frames, ids):
            expected = np.zeros(spec.feature_dim)
            expected[sym] = 1.0
            assert np.array_equal(row, expected)

    def test_unknown_language(self):
        with pytest.raises(MissingCorpusError):
            synth_generate(overlapping_world(), "XX", 1, 0)

    def test_frames_per_symbol_range_respected(self):
        spec = SynthSpec(lexicons=overlapping_world().lexicons, frames_per_symbol=(2, 4))
        for frames, tagged in synth_generate(spec, "DE", 20, seed=5):
            n = len(spec.vocab.encode(tagged))
            assert 2 * n <= frames.shape[0] <= 4 * n


class TestWorlds:
    def inventories(self, spec):
        out = {}
        for lang, lex in spec.lexicons.items():
            out[lang] = {
                (surface, label)
                for label, surfaces in lex.entities.items()
                for surface in surfaces
            }
        return out

    def test_overlapping_world_shares_surfaces(self):
        inv = self.inventories(overlapping_world())
        shared = inv["DE"] & inv["NL"]
        assert shared
        assert inv["DE"] - inv["NL"] and inv["NL"] - inv["DE"]

    def test_disjoint_world_shares_nothing(self):
        inv = self.inventories(disjoint_world())
        assert not inv["DE"] & inv["NL"]
        # character material is disjoint too, which is what starves
        # zero-shot transfer
        src_chars = set("".join(s for s, _ in inv["DE"])) - {" "}
        tgt_chars = set("".join(s for s, _ in inv["NL"])) - {" "}
        assert not src_chars & tgt_chars

    def test_no_doubled_letters_anywhere(self):
        # the affine frame model cannot emit blank-separated repeats
        for world in (overlapping_world(), disjoint_world()):
            for lex in world.lexicons.values():
                material = list(lex.words) + [
                    s for surfaces in lex.entities.values() for s in surfaces
                ]
                for word in material:
                    assert not any(a == b for a, b in zip(word, word[1:])), word

    def test_world_by_name(self):
        assert world_by_name("overlapping").lexicons.keys() == {"DE", "NL"}
        with pytest.raises(MissingCorpusError):
            world_by_name("imaginary")

    def test_all_labels_covered(self):
        for lex in overlapping_world().lexicons.values():
            assert set(lex.entities) == set(EntityLabel)


class TestDatasets:
    def test_make_dataset_split_sizes(self):
        ds = make_dataset(overlapping_world(), "DE", 12, 5, seed=0)
        assert len(ds.train) == 12 and len(ds.test) == 5

    def test_train_test_streams_differ(self):
        ds = make_dataset(overlapping_world(), "DE", 10, 10, seed=0)
        assert [t for _, t in ds.train] != [t for _, t in ds.test]

    def test_corpus_round_trip(self, tmp_path):
        examples = synth_generate(overlapping_world(), "NL", 8, seed=6)
        write_synth_corpus(tmp_path, examples, "NL")
        records, back = load_synth_corpus(tmp_path)
        assert len(records) == len(back) == 8
        assert [t for _, t in back] == [t for _, t in examples]
        for (fa, _), (fb, _) in zip(examples, back):
            assert np.array_equal(fa, fb)
        with open(tmp_path / "manifest.jsonl", encoding="utf-8") as fp:
            manifest = read_manifest(fp)
        assert all(rec.lang.value == "NL" for rec in manifest)
        assert all(rec.duration_s == pytest.approx(f.shape[0] / 100.0)
                   for rec, (f, _) in zip(manifest, examples))

    def test_validation_rejects_bad_specs(self):
        lex = overlapping_world().lexicons
        with pytest.raises(ValueError):
            SynthSpec(lexicons=lex, frames_per_symbol=(0, 2))
        with pytest.raises(ValueError):
            SynthSpec(lexicons=lex, feature_dim=4)
        with pytest.raises(ValueError):
            Lexicon(words=(), entities={})

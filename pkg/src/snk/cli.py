"""Command-line entry point.

One binary, ten subcommands over the documented file formats. Uniform
flags: ``--seed``, ``--out``, ``--format {tsv,json,aligned}`` and
``--jobs``. Exit codes: 0 success, 1 usage error, 2 data/format error,
3 internal error. ``SNK_LOG`` selects log verbosity (debug/info/warning).
All outputs are byte-deterministic given identical inputs, flags, and
seeds.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path
from typing import Sequence

from . import corpus, metrics, synth, tagcodec, transfer
from .audio import read_wav
from .errors import (
    InvalidRecordError,
    LengthMismatchError,
    SnkError,
)
from .model import CtcTagger, load_checkpoint, save_checkpoint
from .tables import Table

log = logging.getLogger("snk")


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would sys.exit(2); we map usage to 1
        raise _UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="snk", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="output file (or directory for synth); stdout by default")
    common.add_argument("--format", choices=("tsv", "json", "aligned"), default="tsv")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--jobs", type=int, default=1)
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    p = sub.add_parser("clean", parents=[common], help="clean texts and filter a manifest")
    p.add_argument("manifest")
    p.add_argument("--lang", help="cleaning language; default: the manifest's single language")
    p.add_argument("--stddev-threshold", type=float, default=0.001)
    p.add_argument("--translit", help="JSON file mapping codepoint sequences to Latin strings")
    p.add_argument("--rejected", help="optional TSV of (id, reason) for rejected records")

    p = sub.add_parser("annotate", parents=[common], help="merge BIO pseudo-annotations")
    p.add_argument("manifest")
    p.add_argument("--bio", required=True, help="id-keyed BIO annotation file")

    p = sub.add_parser("stats", parents=[common], help="corpus statistics table")
    p.add_argument("manifest")

    p = sub.add_parser("overlap", parents=[common], help="entity overlap matrix")
    p.add_argument("corpora", nargs="+", metavar="NAME=MANIFEST")

    p = sub.add_parser("sample", parents=[common], help="deterministic k%% subset")
    p.add_argument("manifest")
    p.add_argument("--k", type=float, required=True)

    p = sub.add_parser("eval", parents=[common], help="score hypothesis vs reference manifests")
    p.add_argument("--ref", required=True)
    p.add_argument("--hyp", required=True)

    p = sub.add_parser("synth", parents=[common], help="generate a synthetic corpus")
    p.add_argument("--world", default="overlapping", choices=("overlapping", "disjoint"))
    p.add_argument("--lang", default="DE")
    p.add_argument("-n", type=int, default=200)

    p = sub.add_parser("ctc-train", parents=[common], help="train the CTC tagger")
    p.add_argument("--data", required=True, help="synthetic corpus directory")
    p.add_argument("--steps", type=int, default=800)
    p.add_argument("--batch-size", type=int, default=16)
    p.add_argument("--peak-lr", type=float, default=0.15)

    p = sub.add_parser("ctc-decode", parents=[common], help="decode frames with a checkpoint")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True, help="synthetic corpus directory")
    p.add_argument("--decoder", choices=("greedy", "beam"), default="greedy")
    p.add_argument("--beam-width", type=int, default=8)

    p = sub.add_parser("transfer", parents=[common], help="run a transfer plan")
    p.add_argument("--plan", required=True)

    return parser


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _emit_table(table: Table, args) -> None:
    if args.format == "json":
        _emit(json.dumps(_json_cells(table), indent=2) + "\n", args.out)
    elif args.format == "aligned":
        _emit(table.to_aligned(), args.out)
    else:
        _emit(table.to_tsv(), args.out)


def _json_cells(table: Table) -> list[dict]:
    def value(cell: str):
        try:
            return int(cell)
        except ValueError:
            try:
                return float(cell)
            except ValueError:
                return cell

    return [{k: value(v) for k, v in row.items()} for row in table.to_records()]


def _load_manifest(path) -> list[corpus.UtteranceRecord]:
    with open(path, encoding="utf-8") as fp:
        return corpus.read_manifest(fp)


def _write_manifest_out(records, out: str | None) -> None:
    import io

    buf = io.StringIO()
    corpus.write_manifest(records, buf)
    _emit(buf.getvalue(), out)


def _cmd_clean(args) -> int:
    records = _load_manifest(args.manifest)
    langs = {rec.lang for rec in records}
    if args.lang:
        try:
            lang = corpus.Lang(args.lang.upper())
        except ValueError:
            raise _UsageError(f"unknown language {args.lang!r}") from None
    elif len(langs) == 1:
        lang = next(iter(langs))
    elif not records:
        lang = corpus.Lang.EN
    else:
        raise InvalidRecordError("manifest mixes languages; pass --lang")
    translit = None
    if args.translit:
        translit = json.loads(Path(args.translit).read_text(encoding="utf-8"))
    cfg = corpus.CleaningConfig(
        lang=lang, stddev_threshold=args.stddev_threshold, translit_table=translit
    )

    cleaned_records = []
    for rec in records:
        cleaned = corpus.clean_text(rec.text, cfg)
        if cleaned == rec.text:
            cleaned_records.append(rec)
        elif rec.tagged_text is None:
            cleaned_records.append(replace(rec, text=cleaned))
        else:
            raise InvalidRecordError(
                f"{rec.id}: cannot re-clean an annotated record; clean before annotate"
            )

    base = Path(args.manifest).parent
    kept, rejected = corpus.filter_corpus(
        cleaned_records, cfg, lambda rel: read_wav(base / rel), jobs=args.jobs
    )
    log.info("kept %d of %d records", len(kept), len(records))
    if args.rejected:
        table = Table(("id", "reason"), tuple((rec.id, reason) for rec, reason in rejected))
        Path(args.rejected).write_text(table.to_tsv(), encoding="utf-8")
    _write_manifest_out(kept, args.out)
    return 0


def _cmd_annotate(args) -> int:
    records = _load_manifest(args.manifest)
    with open(args.bio, encoding="utf-8") as fp:
        annotations = corpus.read_bio_annotations(fp)
    _write_manifest_out(corpus.merge_annotations(records, annotations), args.out)
    return 0


def _cmd_stats(args) -> int:
    _emit_table(corpus.compute_stats(_load_manifest(args.manifest)).to_table(), args)
    return 0


def _cmd_overlap(args) -> int:
    inventories: dict[str, corpus.EntityInventory] = {}
    for spec in args.corpora:
        name, sep, path = spec.partition("=")
        if not sep or not name:
            raise _UsageError(f"expected NAME=MANIFEST, got {spec!r}")
        inventories[name] = corpus.entity_inventory(_load_manifest(path))
    _emit_table(corpus.overlap_matrix(inventories), args)
    return 0


def _cmd_sample(args) -> int:
    if not 0 <= args.k <= 100:
        raise _UsageError(f"--k must lie in [0, 100], got {args.k}")
    records = _load_manifest(args.manifest)
    _write_manifest_out(transfer.sample_subset(records, args.k, args.seed), args.out)
    return 0


def _cmd_eval(args) -> int:
    ref_records = _load_manifest(args.ref)
    hyp_records = {rec.id: rec for rec in _load_manifest(args.hyp)}
    if set(rec.id for rec in ref_records) != set(hyp_records):
        raise LengthMismatchError("reference and hypothesis manifests carry different ids")
    refs = []
    hyps = []
    n_repairs = 0
    for rec in ref_records:
        if rec.tagged_text is None:
            raise InvalidRecordError(f"{rec.id}: reference record lacks tagged_text")
        refs.append(tagcodec.decode_inline(rec.tagged_text, "strict")[0])
        hyp = hyp_records[rec.id]
        decoded, events = tagcodec.decode_inline(hyp.tagged_text or hyp.text, "lenient")
        n_repairs += len(events)
        hyps.append(decoded)
    report = replace(metrics.f1_micro(refs, hyps), n_repairs=n_repairs)
    if args.format == "json":
        _emit(json.dumps(report.to_json_dict(), indent=2) + "\n", args.out)
    else:
        _emit_table(report.to_table(), args)
    return 0


def _cmd_synth(args) -> int:
    if not args.out:
        raise _UsageError("synth writes a corpus directory; pass --out DIR")
    world = synth.world_by_name(args.world)
    examples = synth.synth_generate(world, args.lang.upper(), args.n, args.seed)
    synth.write_synth_corpus(args.out, examples, args.lang.upper())
    log.info("wrote %d utterances to %s", len(examples), args.out)
    return 0


def _cmd_ctc_train(args) -> int:
    if not args.out:
        raise _UsageError("ctc-train writes a checkpoint; pass --out FILE")
    if args.steps < 0 or args.batch_size < 1:
        raise _UsageError("--steps must be >= 0 and --batch-size >= 1")
    _, examples = synth.load_synth_corpus(args.data)
    tagger = CtcTagger(
        total_steps=args.steps,
        batch_size=args.batch_size,
        peak_learning_rate=args.peak_lr,
        seed=args.seed,
    )
    tagger.fit([frames for frames, _ in examples], [text for _, text in examples])
    save_checkpoint(args.out, tagger)
    if tagger.loss_curve_:
        log.info("final training loss %.4f", tagger.loss_curve_[-1])
    return 0


def _cmd_ctc_decode(args) -> int:
    tagger = load_checkpoint(args.model)
    tagger.decoder = args.decoder
    tagger.beam_width = args.beam_width
    records, examples = synth.load_synth_corpus(args.data)
    decoded = tagger.predict([frames for frames, _ in examples])
    out_records = []
    for rec, raw in zip(records, decoded):
        transcript, _ = tagcodec.decode_inline(raw, "lenient")
        out_records.append(
            replace(
                rec,
                text=transcript.text,
                tagged_text=tagcodec.encode_inline(transcript),
            )
        )
    _write_manifest_out(out_records, args.out)
    return 0


def _cmd_transfer(args) -> int:
    plan, corpora_spec = transfer.load_plan(args.plan)
    corpora = transfer.build_corpora(corpora_spec, (plan.source, plan.target))
    report = transfer.run_transfer(plan, corpora)
    _emit_table(report.to_table(), args)
    return 0


_COMMANDS = {
    "clean": _cmd_clean,
    "annotate": _cmd_annotate,
    "stats": _cmd_stats,
    "overlap": _cmd_overlap,
    "sample": _cmd_sample,
    "eval": _cmd_eval,
    "synth": _cmd_synth,
    "ctc-train": _cmd_ctc_train,
    "ctc-decode": _cmd_ctc_decode,
    "transfer": _cmd_transfer,
}


def _setup_logging() -> None:
    level = os.environ.get("SNK_LOG", "warning").upper()
    logging.basicConfig(stream=sys.stderr, level=getattr(logging, level, logging.WARNING),
                        format="%(name)s %(levelname)s %(message)s")


def run(argv: Sequence[str]) -> int:
    """Dispatch one invocation; returns the exit status."""
    _setup_logging()
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_usage(sys.stderr)
            return 1
        return _COMMANDS[args.command](args)
    except _UsageError as exc:
        print(f"snk: usage error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:  # argparse --help
        return int(exc.code or 0)
    except SnkError as exc:
        print(f"snk: error: {exc}", file=sys.stderr)
        return 2
    except (OSError, json.JSONDecodeError) as exc:
        print(f"snk: error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # pragma: no cover - defensive
        log.exception("internal error")
        print(f"snk: internal error: {exc}", file=sys.stderr)
        return 3


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()

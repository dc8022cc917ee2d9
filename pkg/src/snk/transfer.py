"""Cross-lingual transfer protocol at desk scale.

A source-language model is trained once, then applied to a target
language zero-shot (k = 0) or after fine-tuning on a deterministic k%
subset of the target training set; a target-only baseline anchors the
comparison. Every row of the resulting report carries WER, EER, and
triple micro-F1 on the fixed target test split.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence, TypeVar

import numpy as np

from . import metrics, tagcodec
from .errors import FormatError, MissingCorpusError
from .model import CtcTagger, TrainConfig
from .synth import SynthDataset, make_dataset, world_by_name
from .tables import Table, format_ratio

__all__ = [
    "sample_subset",
    "TransferPlan",
    "TransferRow",
    "TransferReport",
    "run_transfer",
    "load_plan",
    "build_corpora",
]

T = TypeVar("T")


def sample_subset(records: Sequence[T], k_pct: float, seed: int) -> list[T]:
    """First ceil(k% of N) items of a seeded shuffle.

    Subsets under one seed are nested: the k=20 subset is a prefix of
    the k=40 subset.
    """
    if not 0 <= k_pct <= 100:
        raise ValueError(f"k_pct must lie in [0, 100], got {k_pct}")
    take = math.ceil(k_pct / 100.0 * len(records))
    order = np.random.default_rng(seed).permutation(len(records))
    return [records[i] for i in order[:take]]


@dataclass(frozen=True)
class TransferPlan:
    source: str
    target: str
    k_values: tuple[float, ...] = (0.0, 20.0, 40.0)
    seed: int = 0
    train_cfg: TrainConfig = field(default_factory=TrainConfig)
    finetune_cfg: TrainConfig = field(default_factory=lambda: TrainConfig(total_steps=200))

    def __post_init__(self) -> None:
        for k in self.k_values:
            if not 0 <= k <= 100:
                raise ValueError(f"k value {k} outside [0, 100]")


@dataclass(frozen=True)
class TransferRow:
    system: str
    pair: str
    k_pct: float | None  # None on the baseline row
    wer: float | None
    eer: float | None
    f1: float


@dataclass(frozen=True)
class TransferReport:
    rows: tuple[TransferRow, ...]

    def to_table(self) -> Table:
        def cell(x, suffix=""):
            return "N/A" if x is None else format_ratio(x) + suffix

        body = tuple(
            (row.system, row.pair,
             "N/A" if row.k_pct is None else f"{row.k_pct:g}%",
             cell(row.wer), cell(row.eer), cell(row.f1))
            for row in self.rows
        )
        return Table(("system", "source_to_target", "k", "wer", "eer", "f1"), body)


def _fit_tagger(train_data, cfg: TrainConfig, warm_from: CtcTagger | None = None) -> CtcTagger:
    X = [frames for frames, _ in train_data]
    y = [text for _, text in train_data]
    params = dict(
        total_steps=cfg.total_steps,
        peak_learning_rate=cfg.peak_learning_rate,
        warmup_fraction=cfg.warmup_fraction,
        batch_size=cfg.batch_size,
        seed=cfg.seed,
        beta1=cfg.beta1,
        beta2=cfg.beta2,
        epsilon=cfg.epsilon,
        weight_decay=cfg.weight_decay,
    )
    if warm_from is None:
        return CtcTagger(**params).fit(X, y)
    tagger = CtcTagger(**params, warm_start=True)
    tagger.vocab_ = warm_from.vocab_
    tagger.model_ = warm_from.model_.copy()  # fresh optimizer state by construction
    tagger.n_features_in_ = warm_from.n_features_in_
    return tagger.fit(X, y)


def _evaluate(tagger: CtcTagger, test_data) -> metrics.EvalReport:
    refs = [tagcodec.decode_inline(text, "strict")[0] for _, text in test_data]
    hyps = [tagcodec.decode_inline(pred, "lenient")[0]
            for pred in tagger.predict([frames for frames, _ in test_data])]
    return metrics.f1_micro(refs, hyps)


def run_transfer(plan: TransferPlan, corpora: Mapping[str, SynthDataset]) -> TransferReport:
    """Execute the full protocol and assemble the report.

    Rows: a target-only baseline, then one transfer row per k in plan
    order (k = 0 reuses the source model unmodified). Deterministic
    given the plan's seeds.
    """
    for name in (plan.source, plan.target):
        if name not in corpora:
            raise MissingCorpusError(name)
    source = corpora[plan.source]
    target = corpora[plan.target]
    pair = f"{plan.source}->{plan.target}"

    source_tagger = _fit_tagger(list(source.train), plan.train_cfg)
    baseline = _fit_tagger(list(target.train), plan.train_cfg)
    rows = [_to_row("baseline", "N/A", None, _evaluate(baseline, target.test))]
    for k in plan.k_values:
        if k == 0:
            tagger = source_tagger
        else:
            subset = sample_subset(list(target.train), k, plan.seed)
            tagger = _fit_tagger(subset, plan.finetune_cfg, warm_from=source_tagger)
        rows.append(_to_row("transfer", pair, k, _evaluate(tagger, target.test)))
    return TransferReport(tuple(rows))


def _to_row(system: str, pair: str, k: float | None, report: metrics.EvalReport) -> TransferRow:
    return TransferRow(system, pair, k, report.wer, report.eer, report.f1)


# ---------------------------------------------------------------------------
# Plan files
# ---------------------------------------------------------------------------

def load_plan(path) -> tuple[TransferPlan, dict]:
    """Read a plan document; returns the plan and its corpora section.

    Schema (JSON object): ``source``, ``target``, ``k_values``, ``seed``,
    ``train`` / ``finetune`` (TrainConfig fields), and ``corpora`` with
    either a bundled ``world`` name or an inline world description, plus
    ``n_train`` / ``n_test`` / ``seed``.
    """
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise FormatError(f"{path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise FormatError(f"{path}: plan must be a JSON object")
    try:
        plan = TransferPlan(
            source=doc["source"],
            target=doc["target"],
            k_values=tuple(doc.get("k_values", (0, 20, 40))),
            seed=int(doc.get("seed", 0)),
            train_cfg=TrainConfig(**doc.get("train", {})),
            finetune_cfg=TrainConfig(**doc.get("finetune", {})),
        )
        corpora_spec = dict(doc.get("corpora", {}))
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"{path}: malformed plan ({exc})") from exc
    return plan, corpora_spec


def build_corpora(corpora_spec: Mapping, names: Sequence[str]) -> dict[str, SynthDataset]:
    """Generate the named datasets for a plan's corpora section."""
    world = world_by_name(str(corpora_spec.get("world", "overlapping")))
    n_train = int(corpora_spec.get("n_train", 600))
    n_test = int(corpora_spec.get("n_test", 120))
    seed = int(corpora_spec.get("seed", 0))
    out: dict[str, SynthDataset] = {}
    for offset, name in enumerate(dict.fromkeys(names)):
        out[name] = make_dataset(world, name, n_train, n_test, seed + 1000 * offset)
    return out

"""Trainable frame classifier with a CTC objective.

The acoustic encoder is a single affine map per frame — a desk-scale
stand-in for a pretrained speech encoder — optimized with decoupled
weight decay Adam under a linear warmup-then-decay schedule (warmup is
one third of the steps by default). :class:`CtcTagger` wraps the whole
thing in a scikit-learn estimator so it clones, grid-searches, and
warm-starts like anything else in that ecosystem.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator

from . import metrics, tagcodec
from .ctc import Vocab, beam_decode, ctc_loss, default_vocab, greedy_decode
from .errors import FormatError, InfeasibleTargetError, NotFittedError, ShapeMismatchError
from .validation import check_frame_list, check_frames

__all__ = [
    "AffineFrameModel",
    "forward_model",
    "TrainConfig",
    "learning_rate",
    "train",
    "CtcTagger",
    "save_checkpoint",
    "load_checkpoint",
]

CHECKPOINT_FORMAT = "snk-ckpt-1"


@dataclass
class AffineFrameModel:
    """Per-frame affine classifier: logits = frames @ weight.T + bias."""

    weight: np.ndarray  # (V, F)
    bias: np.ndarray  # (V,)

    def __post_init__(self) -> None:
        self.weight = np.asarray(self.weight, dtype=np.float64)
        self.bias = np.asarray(self.bias, dtype=np.float64)
        if self.weight.ndim != 2 or self.bias.shape != (self.weight.shape[0],):
            raise ShapeMismatchError(
                f"weight {self.weight.shape} and bias {self.bias.shape} disagree"
            )

    @classmethod
    def init(cls, n_symbols: int, feature_dim: int, rng: np.random.Generator,
             scale: float = 0.01) -> "AffineFrameModel":
        return cls(rng.normal(0.0, scale, (n_symbols, feature_dim)), np.zeros(n_symbols))

    def copy(self) -> "AffineFrameModel":
        return AffineFrameModel(self.weight.copy(), self.bias.copy())


def forward_model(model: AffineFrameModel, frames: np.ndarray) -> np.ndarray:
    """Frame features -> logit matrix, shape [T, V]."""
    frames = check_frames(frames, model.weight.shape[1])
    return frames @ model.weight.T + model.bias


@dataclass(frozen=True)
class TrainConfig:
    total_steps: int = 800
    peak_learning_rate: float = 0.15
    warmup_fraction: float = 1.0 / 3.0
    batch_size: int = 16
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    weight_decay: float = 0.01

    def __post_init__(self) -> None:
        if not 0.0 < self.warmup_fraction < 1.0:
            raise ValueError("warmup_fraction must lie in (0, 1)")
        if self.total_steps < 0 or self.batch_size < 1:
            raise ValueError("total_steps must be >= 0 and batch_size >= 1")


def learning_rate(cfg: TrainConfig, step: int) -> float:
    """Linear 0 -> peak over the warmup steps, then linear peak -> 0."""
    warmup = max(1, int(cfg.total_steps * cfg.warmup_fraction))
    if step < warmup:
        return cfg.peak_learning_rate * (step + 1) / warmup
    remaining = cfg.total_steps - warmup
    if remaining <= 0:
        return cfg.peak_learning_rate
    return cfg.peak_learning_rate * (cfg.total_steps - step) / remaining


class _AdamW:
    """Decoupled weight decay Adam over a list of parameter arrays."""

    def __init__(self, params: list[np.ndarray], cfg: TrainConfig):
        self.params = params
        self.cfg = cfg
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, grads: list[np.ndarray], lr: float) -> None:
        cfg = self.cfg
        self.t += 1
        for p, g, m, v in zip(self.params, grads, self.m, self.v):
            m *= cfg.beta1
            m += (1 - cfg.beta1) * g
            v *= cfg.beta2
            v += (1 - cfg.beta2) * g * g
            m_hat = m / (1 - cfg.beta1**self.t)
            v_hat = v / (1 - cfg.beta2**self.t)
            p -= lr * (m_hat / (np.sqrt(v_hat) + cfg.epsilon) + cfg.weight_decay * p)


def train(
    model: AffineFrameModel,
    data: Sequence[tuple[np.ndarray, str]],
    cfg: TrainConfig,
    vocab: Vocab | None = None,
) -> tuple[AffineFrameModel, list[float]]:
    """Mini-batch CTC training; deterministic given ``cfg.seed``.

    ``data`` pairs frame matrices with (tagged) target strings. Targets
    are encoded and feasibility-checked up front so training never
    silently skips an example. Returns the trained model (the input is
    left untouched) and the per-step mean batch loss.
    """
    vocab = vocab or default_vocab()
    encoded = []
    for frames, text in data:
        frames = check_frames(frames, model.weight.shape[1])
        ids = vocab.encode(text)
        repeats = sum(a == b for a, b in zip(ids, ids[1:]))
        if frames.shape[0] < len(ids) + repeats:
            raise InfeasibleTargetError(
                f"target {text!r} needs {len(ids) + repeats} frames, got {frames.shape[0]}"
            )
        encoded.append((frames, ids))

    model = model.copy()
    if cfg.total_steps == 0 or not encoded:
        return model, []

    rng = np.random.default_rng(cfg.seed)
    opt = _AdamW([model.weight, model.bias], cfg)
    curve: list[float] = []
    n = len(encoded)
    for step in range(cfg.total_steps):
        idx = rng.integers(0, n, size=cfg.batch_size)
        grad_w = np.zeros_like(model.weight)
        grad_b = np.zeros_like(model.bias)
        batch_loss = 0.0
        for i in idx:
            frames, ids = encoded[i]
            logits = frames @ model.weight.T + model.bias
            loss, dlogits = ctc_loss(logits, ids)
            batch_loss += loss
            grad_w += dlogits.T @ frames
            grad_b += dlogits.sum(axis=0)
        scale = 1.0 / cfg.batch_size  # mean, so the LR is batch-size robust
        opt.step([grad_w * scale, grad_b * scale], learning_rate(cfg, step))
        curve.append(batch_loss * scale)
    return model, curve


class CtcTagger(BaseEstimator):
    """Scikit-learn estimator that transcribes frames with inline entity tags.

    ``fit(X, y)`` takes a list of T x F frame matrices and tagged target
    strings; ``predict(X)`` returns decoded strings. With
    ``warm_start=True`` a subsequent ``fit`` continues from the learned
    weights (fresh optimizer state), which is how fine-tuning on a
    target-language subset is expressed.
    """

    def __init__(
        self,
        vocab: Vocab | None = None,
        total_steps: int = 800,
        peak_learning_rate: float = 0.15,
        warmup_fraction: float = 1.0 / 3.0,
        batch_size: int = 16,
        seed: int = 0,
        beta1: float = 0.9,
        beta2: float = 0.999,
        epsilon: float = 1e-8,
        weight_decay: float = 0.01,
        init_scale: float = 0.01,
        decoder: str = "greedy",
        beam_width: int = 8,
        warm_start: bool = False,
    ):
        self.vocab = vocab
        self.total_steps = total_steps
        self.peak_learning_rate = peak_learning_rate
        self.warmup_fraction = warmup_fraction
        self.batch_size = batch_size
        self.seed = seed
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon = epsilon
        self.weight_decay = weight_decay
        self.init_scale = init_scale
        self.decoder = decoder
        self.beam_width = beam_width
        self.warm_start = warm_start

    def _train_config(self) -> TrainConfig:
        return TrainConfig(
            total_steps=self.total_steps,
            peak_learning_rate=self.peak_learning_rate,
            warmup_fraction=self.warmup_fraction,
            batch_size=self.batch_size,
            seed=self.seed,
            beta1=self.beta1,
            beta2=self.beta2,
            epsilon=self.epsilon,
            weight_decay=self.weight_decay,
        )

    def fit(self, X, y):
        if self.decoder not in ("greedy", "beam"):
            raise ValueError(f"decoder must be 'greedy' or 'beam', got {self.decoder!r}")
        frames_list, dim = check_frame_list(X)
        if len(frames_list) != len(y):
            raise ShapeMismatchError(f"{len(frames_list)} feature matrices vs {len(y)} targets")
        if self.warm_start and hasattr(self, "model_"):
            if dim != self.n_features_in_:
                raise ShapeMismatchError(
                    f"warm start expects {self.n_features_in_} features, got {dim}"
                )
            model = self.model_
        else:
            self.vocab_ = self.vocab or default_vocab()
            rng = np.random.default_rng(self.seed)
            model = AffineFrameModel.init(len(self.vocab_), dim, rng, self.init_scale)
            self.n_features_in_ = dim
        self.model_, self.loss_curve_ = train(
            model, list(zip(frames_list, y)), self._train_config(), self.vocab_
        )
        return self

    def _check_fitted(self) -> None:
        if not hasattr(self, "model_"):
            raise NotFittedError("call fit before predict")

    def predict_logits(self, X) -> list[np.ndarray]:
        self._check_fitted()
        frames_list, _ = check_frame_list(X, self.n_features_in_)
        return [forward_model(self.model_, frames) for frames in frames_list]

    def predict(self, X) -> list[str]:
        decoded = []
        for logits in self.predict_logits(X):
            if self.decoder == "beam":
                decoded.append(beam_decode(logits, self.vocab_, self.beam_width))
            else:
                decoded.append(greedy_decode(logits, self.vocab_))
        return decoded

    def score(self, X, y) -> float:
        """Micro-F1 over entity triples of predictions vs targets."""
        refs = [tagcodec.decode_inline(text, "lenient")[0] for text in y]
        hyps = [tagcodec.decode_inline(text, "lenient")[0] for text in self.predict(X)]
        return metrics.f1_micro(refs, hyps).f1


def save_checkpoint(path, tagger: CtcTagger) -> None:
    """Persist a fitted tagger as a single JSON document.

    Layout (format ``snk-ckpt-1``): vocabulary symbol list, feature and
    vocabulary sizes, row-major flattened weights, bias, and the
    training configuration. Stable across versions.
    """
    tagger._check_fitted()
    v, f = tagger.model_.weight.shape
    doc = {
        "format": CHECKPOINT_FORMAT,
        "vocab": list(tagger.vocab_.symbols),
        "feature_dim": f,
        "vocab_size": v,
        "weight": [float(x) for x in tagger.model_.weight.ravel()],
        "bias": [float(x) for x in tagger.model_.bias],
        "train_config": vars(tagger._train_config()).copy(),
        "decoder": tagger.decoder,
        "beam_width": tagger.beam_width,
        "init_scale": tagger.init_scale,
    }
    Path(path).write_text(json.dumps(doc), encoding="utf-8")


def load_checkpoint(path) -> CtcTagger:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise FormatError(f"{path}: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("format") != CHECKPOINT_FORMAT:
        raise FormatError(f"{path}: not a {CHECKPOINT_FORMAT} checkpoint")
    try:
        cfg = doc["train_config"]
        tagger = CtcTagger(
            vocab=Vocab(tuple(doc["vocab"])),
            decoder=doc.get("decoder", "greedy"),
            beam_width=doc.get("beam_width", 8),
            init_scale=doc.get("init_scale", 0.01),
            **cfg,
        )
        weight = np.array(doc["weight"], dtype=np.float64).reshape(
            doc["vocab_size"], doc["feature_dim"]
        )
        bias = np.array(doc["bias"], dtype=np.float64)
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"{path}: malformed checkpoint ({exc})") from exc
    tagger.vocab_ = tagger.vocab
    tagger.model_ = AffineFrameModel(weight, bias)
    tagger.n_features_in_ = doc["feature_dim"]
    return tagger

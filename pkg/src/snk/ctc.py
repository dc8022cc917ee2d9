"""CTC loss, lattice, and decoders over a tag-extended character vocabulary.

The output vocabulary is character-level: the blank at index 0, the
lowercase letters, space, apostrophe, and the four entity-tag symbols,
so a single frame classifier can emit entity tags inline with the
transcription. All lattice arithmetic is carried out in the log domain
with IEEE ``-inf`` for impossible states; ``numpy.logaddexp`` treats it
exactly, so no finite sentinel is needed.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import groupby
from typing import Sequence

import numpy as np

from .errors import InfeasibleTargetError, NanInputError, VocabError

__all__ = [
    "BLANK",
    "Vocab",
    "default_vocab",
    "log_softmax",
    "collapse",
    "CtcLattice",
    "ctc_lattice",
    "ctc_loss",
    "greedy_decode",
    "beam_decode",
]

BLANK = 0
_BLANK_TOKEN = "<blank>"


@dataclass(frozen=True)
class Vocab:
    """Ordered output units; ``symbols[0]`` is the reserved blank.

    All four tag symbols must be present so any model built on the vocab
    can emit entity tags.
    """

    symbols: tuple[str, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "symbols", tuple(self.symbols))
        if not self.symbols or self.symbols[0] != _BLANK_TOKEN:
            raise VocabError(f"symbols[0] must be {_BLANK_TOKEN!r}")
        if len(set(self.symbols)) != len(self.symbols):
            raise VocabError("duplicate symbols")
        for sym in "{[$]":
            if sym not in self.symbols:
                raise VocabError(f"tag symbol {sym!r} missing from vocabulary")
        object.__setattr__(self, "_index", {s: i for i, s in enumerate(self.symbols)})

    def __len__(self) -> int:
        return len(self.symbols)

    def encode(self, text: str) -> list[int]:
        """Map a string to symbol indices, one per character."""
        index = self._index
        try:
            return [index[ch] for ch in text]
        except KeyError as exc:
            raise VocabError(f"character {exc.args[0]!r} not in vocabulary") from None

    def decode(self, ids: Sequence[int]) -> str:
        """Render symbol indices as a string; blanks are dropped."""
        return "".join(self.symbols[i] for i in ids if i != BLANK)


def default_vocab() -> Vocab:
    """Blank + a-z + space + apostrophe + the four tag symbols (33 units)."""
    letters = tuple(chr(c) for c in range(ord("a"), ord("z") + 1))
    return Vocab((_BLANK_TOKEN, *letters, " ", "'", "{", "[", "$", "]"))


def log_softmax(logits: np.ndarray) -> np.ndarray:
    """Row-wise log-softmax of a T x V score matrix."""
    shifted = logits - logits.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def collapse(frame_symbols: Sequence[int], blank: int = BLANK) -> list[int]:
    """Standard CTC collapse: merge adjacent repeats, then drop blanks."""
    return [k for k, _ in groupby(frame_symbols) if k != blank]


@dataclass(frozen=True)
class CtcLattice:
    """Forward/backward variables over the blank-extended target.

    ``alpha[t, s]`` includes the emission at frame ``t``; ``beta[t, s]``
    covers frames after ``t``, so ``alpha + beta - log_likelihood`` is
    the state-occupancy log-posterior and each frame's posterior sums
    to one.
    """

    alpha: np.ndarray
    beta: np.ndarray
    extended_targets: np.ndarray
    log_likelihood: float
    log_likelihood_backward: float

    def occupancy(self) -> np.ndarray:
        """Posterior over extended-target states, T x (2L+1), probability domain."""
        return np.exp(self.alpha + self.beta - self.log_likelihood)


def _extended(targets: Sequence[int], blank: int) -> np.ndarray:
    ext = np.full(2 * len(targets) + 1, blank, dtype=np.int64)
    ext[1::2] = targets
    return ext


def _check_targets(log_probs: np.ndarray, targets: Sequence[int], blank: int) -> None:
    T, V = log_probs.shape
    if len(targets) == 0:
        raise InfeasibleTargetError("empty target")
    arr = np.asarray(targets)
    if ((arr < 0) | (arr >= V)).any():
        raise VocabError("target symbol index out of range")
    if (arr == blank).any():
        raise InfeasibleTargetError("target contains the blank symbol")
    repeats = int((arr[1:] == arr[:-1]).sum())
    if T < len(targets) + repeats:
        raise InfeasibleTargetError(
            f"{T} frames cannot emit {len(targets)} symbols with {repeats} adjacent repeats"
        )


def ctc_lattice(log_probs: np.ndarray, targets: Sequence[int], blank: int = BLANK) -> CtcLattice:
    """Run the log-domain forward and backward recursions.

    Parameters
    ----------
    log_probs : np.ndarray, shape [T, V]
        Frame-level log-softmax outputs.
    targets : sequence of int
        Label sequence without blanks.
    blank : int
        Blank index (0 by convention).
    """
    _check_targets(log_probs, targets, blank)
    T = log_probs.shape[0]
    ext = _extended(targets, blank)
    S = len(ext)
    lp = log_probs[:, ext]  # T x S emission scores, gathered once

    # skip transition s-2 -> s allowed into non-blank states with a
    # different label than the state two back
    can_skip = np.zeros(S, dtype=bool)
    can_skip[2:] = (ext[2:] != blank) & (ext[2:] != ext[:-2])

    neg_inf = -np.inf
    alpha = np.full((T, S), neg_inf)
    alpha[0, 0] = lp[0, 0]
    if S > 1:
        alpha[0, 1] = lp[0, 1]
    for t in range(1, T):
        prev = alpha[t - 1]
        acc = prev.copy()
        acc[1:] = np.logaddexp(acc[1:], prev[:-1])
        acc[can_skip] = np.logaddexp(acc[can_skip], prev[np.flatnonzero(can_skip) - 2])
        alpha[t] = acc + lp[t]

    beta = np.full((T, S), neg_inf)
    beta[T - 1, S - 1] = 0.0
    if S > 1:
        beta[T - 1, S - 2] = 0.0
    skip_idx = np.flatnonzero(can_skip)
    for t in range(T - 2, -1, -1):
        nxt = beta[t + 1] + lp[t + 1]
        acc = nxt.copy()
        acc[:-1] = np.logaddexp(acc[:-1], nxt[1:])
        acc[skip_idx - 2] = np.logaddexp(acc[skip_idx - 2], nxt[skip_idx])
        beta[t] = acc

    ll_fwd = np.logaddexp(alpha[T - 1, S - 1], alpha[T - 1, S - 2]) if S > 1 else alpha[T - 1, S - 1]
    ll_bwd = np.logaddexp(beta[0, 0] + lp[0, 0], beta[0, 1] + lp[0, 1]) if S > 1 else beta[0, 0] + lp[0, 0]
    return CtcLattice(alpha, beta, ext, float(ll_fwd), float(ll_bwd))


def ctc_loss(
    logits: np.ndarray, targets: Sequence[int], blank: int = BLANK
) -> tuple[float, np.ndarray]:
    """Negative log-probability of all alignments collapsing to ``targets``,
    with its exact gradient.

    Parameters
    ----------
    logits : np.ndarray, shape [T, V]
        Raw unnormalized frame scores.
    targets : sequence of int
        Label indices, blank-free, feasible for T frames.

    Returns
    -------
    loss : float
        ``-log p(targets | logits)``; non-negative.
    grad : np.ndarray, shape [T, V]
        d loss / d logits — the frame softmax minus the lattice
        occupancy posterior.
    """
    logits = np.asarray(logits, dtype=np.float64)
    if logits.ndim != 2 or logits.shape[0] < 1:
        raise NanInputError(f"logits must be a T x V matrix, got shape {logits.shape}")
    if not np.isfinite(logits).all():
        raise NanInputError("logits contain non-finite values")

    log_probs = log_softmax(logits)
    lattice = ctc_lattice(log_probs, targets, blank)
    gamma = lattice.occupancy()  # T x S

    T, V = logits.shape
    occ = np.zeros((T, V))
    ext = lattice.extended_targets
    for symbol in np.unique(ext):
        occ[:, symbol] = gamma[:, ext == symbol].sum(axis=1)
    grad = np.exp(log_probs) - occ
    return -lattice.log_likelihood, grad


def greedy_decode(logits: np.ndarray, vocab: Vocab) -> str:
    """Per-frame argmax, collapsed and rendered as a string."""
    path = np.asarray(logits).argmax(axis=1)
    return vocab.decode(collapse(path.tolist()))


def beam_decode(logits: np.ndarray, vocab: Vocab, beam_width: int) -> str:
    """CTC prefix beam search.

    Probability mass of all frame paths collapsing to the same prefix is
    merged, tracked separately for blank-ending and non-blank-ending
    paths. With no pruning (``beam_width >= `` the number of live
    prefixes) the result is the exact MAP collapsed sequence. Note that
    ``beam_width=1`` maximizes prefix mass step by step and therefore
    need not coincide with :func:`greedy_decode`.

    Parameters
    ----------
    logits : np.ndarray, shape [T, V]
        Raw frame scores; softmax is applied internally.
    vocab : Vocab
        Rendering alphabet; ``len(vocab)`` must equal V.
    beam_width : int
        Number of prefixes kept per frame, >= 1.
    """
    if beam_width < 1:
        raise ValueError("beam_width must be >= 1")
    logits = np.asarray(logits, dtype=np.float64)
    if logits.shape[1] != len(vocab):
        raise VocabError(f"logits have {logits.shape[1]} units, vocab has {len(vocab)}")
    lp = log_softmax(logits)
    T, V = lp.shape
    neg_inf = -np.inf

    # prefix -> [log p(blank-ending paths), log p(non-blank-ending paths)]
    beams: dict[tuple[int, ...], list[float]] = {(): [lp[0, BLANK], neg_inf]}
    for c in range(1, V):
        beams[(c,)] = [neg_inf, lp[0, c]]

    for t in range(1, T):
        top = sorted(beams, key=lambda p: np.logaddexp(*beams[p]), reverse=True)[:beam_width]
        new_beams: dict[tuple[int, ...], list[float]] = {}

        def add(prefix, slot, value):
            entry = new_beams.setdefault(prefix, [neg_inf, neg_inf])
            entry[slot] = np.logaddexp(entry[slot], value)

        for prefix in top:
            pb, pnb = beams[prefix]
            total = np.logaddexp(pb, pnb)
            add(prefix, 0, total + lp[t, BLANK])
            for c in range(1, V):
                if prefix and c == prefix[-1]:
                    # repeat symbol: extending needs a blank-separated path;
                    # the non-blank path collapses onto the same prefix
                    add(prefix + (c,), 1, pb + lp[t, c])
                    add(prefix, 1, pnb + lp[t, c])
                else:
                    add(prefix + (c,), 1, total + lp[t, c])
        beams = new_beams

    best = max(beams, key=lambda p: np.logaddexp(*beams[p]))
    return vocab.decode(best)

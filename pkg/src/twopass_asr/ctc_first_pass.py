"""First-pass streaming-style recognizer: a stack of uni-directional LSTM
layers trained with the CTC objective, plus greedy and prefix beam-search
decoding that emits the n-best lists consumed by the second pass.

The CTC loss is a single differentiable op: the forward value comes from the
log-space forward recursion over the blank-augmented label lattice, and the
gradient from the standard forward-backward statistics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from . import nn
from . import tensor_core as tc
from .errors import TrainingDivergedError, UnreachableTargetError
from .hypotheses import Hypothesis, NBestList
from .tensor_core import Tensor

NEG_INF = -np.inf


def _lattice(target: Sequence[int], blank: int) -> np.ndarray:
    labels = np.empty(2 * len(target) + 1, dtype=np.int64)
    labels[0::2] = blank
    labels[1::2] = np.asarray(target, dtype=np.int64)
    return labels


def min_frames_required(target: Sequence[int]) -> int:
    """Frames needed to emit ``target``: one per token plus one blank
    between each adjacent repeated pair."""
    repeats = sum(1 for a, b in zip(target, target[1:]) if a == b)
    return len(target) + repeats


def ctc_loss(log_probs, target: Sequence[int], blank: int) -> Tensor:
    """Negative log marginal probability of ``target`` under per-frame
    label log-probabilities ``log_probs`` of shape (T, V+1).

    Marginalizes over every frame alignment that collapses to the target
    (repeats merged, blanks removed). Differentiable w.r.t. ``log_probs``.
    """
    x = log_probs if isinstance(log_probs, Tensor) else Tensor(log_probs)
    data = x.data
    t_frames = data.shape[0]
    target = list(int(i) for i in target)
    if min_frames_required(target) > t_frames:
        raise UnreachableTargetError(
            f"target of {len(target)} tokens needs >= {min_frames_required(target)} "
            f"frames, got {t_frames}"
        )
    labels = _lattice(target, blank)
    s = len(labels)
    # alpha[t, s]: log-prob of all lattice prefixes ending at state s after
    # frame t, including the emission at frame t.
    alpha = np.full((t_frames, s), NEG_INF)
    alpha[0, 0] = data[0, blank]
    if s > 1:
        alpha[0, 1] = data[0, labels[1]]
    skip_ok = np.zeros(s, dtype=bool)
    skip_ok[2:] = labels[2:] != labels[:-2]
    skip_ok &= labels != blank
    for t in range(1, t_frames):
        prev = alpha[t - 1]
        stay = prev
        step = np.concatenate(([NEG_INF], prev[:-1]))
        skip = np.concatenate(([NEG_INF, NEG_INF], prev[:-2]))
        skip = np.where(skip_ok, skip, NEG_INF)
        alpha[t] = np.logaddexp(np.logaddexp(stay, step), skip) + data[t, labels]
    with np.errstate(invalid="ignore"):
        log_z = np.logaddexp(alpha[-1, -1], alpha[-1, -2] if s > 1 else NEG_INF)
    if not np.isfinite(log_z):
        raise UnreachableTargetError(
            f"no valid alignment for target of {len(target)} tokens in {t_frames} frames"
        )
    loss_value = np.asarray(-log_z, dtype=data.dtype)

    def bwd(g):
        # beta[t, s] excludes the emission at frame t, so alpha + beta sums
        # full-path products through (t, s).
        beta = np.full((t_frames, s), NEG_INF)
        beta[-1, -1] = 0.0
        if s > 1:
            beta[-1, -2] = 0.0
        for t in range(t_frames - 2, -1, -1):
            nxt = beta[t + 1] + data[t + 1, labels]
            stay = nxt
            step = np.concatenate((nxt[1:], [NEG_INF]))
            skip = np.concatenate((nxt[2:], [NEG_INF, NEG_INF]))
            skip = np.where(np.concatenate((skip_ok[2:], [False, False])), skip, NEG_INF)
            beta[t] = np.logaddexp(np.logaddexp(stay, step), skip)
        occupancy = alpha + beta  # (T, S) in log space
        grad = np.zeros_like(data)
        for state, label in enumerate(labels):
            with np.errstate(invalid="ignore"):
                contribution = np.exp(occupancy[:, state] - log_z)
            contribution[~np.isfinite(occupancy[:, state])] = 0.0
            grad[:, label] -= contribution
        return (grad * g,)

    return tc.custom_op("ctc_loss", (x,), loss_value, bwd)


def greedy_decode(log_probs: np.ndarray, blank: int) -> List[int]:
    """Best-path decode: per-frame argmax, collapse repeats, drop blanks."""
    path = np.argmax(np.asarray(log_probs), axis=-1)
    out: List[int] = []
    prev = -1
    for p in path:
        if p != prev and p != blank:
            out.append(int(p))
        prev = int(p)
    return out


def _ladd(a: float, b: float) -> float:
    if a == NEG_INF:
        return b
    if b == NEG_INF:
        return a
    if a < b:
        a, b = b, a
    return a + math.log1p(math.exp(b - a))


def prefix_beam_search(log_probs: np.ndarray, beam_width: int = 200,
                       n_best: int = 100, blank: Optional[int] = None,
                       prune_log_prob: Optional[float] = None) -> List[Hypothesis]:
    """Rank label sequences by total CTC log-probability.

    Blank-terminated and label-terminated probabilities of each prefix are
    tracked separately and merged, so returned sequences are pairwise
    distinct. ``prune_log_prob``, when set, skips per-frame extensions whose
    frame log-probability is below the threshold (a speed knob; leave None
    for exact search). Ties break toward shorter, then lexicographically
    smaller sequences.
    """
    log_probs = np.asarray(log_probs)
    t_frames, v_plus = log_probs.shape
    if blank is None:
        blank = v_plus - 1
    if beam_width < n_best:
        import warnings
        warnings.warn(f"beam_width {beam_width} < n_best {n_best}; tail ranks may be inexact")
    # prefix -> [log P(prefix, last emission blank), log P(prefix, last emission label)]
    beams: dict = {(): [0.0, NEG_INF]}
    for t in range(t_frames):
        frame = log_probs[t]
        symbols = range(v_plus) if prune_log_prob is None else np.nonzero(frame >= prune_log_prob)[0]
        nxt: dict = {}

        def bump(prefix, which, value):
            cell = nxt.get(prefix)
            if cell is None:
                cell = [NEG_INF, NEG_INF]
                nxt[prefix] = cell
            cell[which] = _ladd(cell[which], value)

        for prefix, (p_b, p_nb) in beams.items():
            total = _ladd(p_b, p_nb)
            bump(prefix, 0, total + frame[blank])
            last = prefix[-1] if prefix else None
            if last is not None:
                bump(prefix, 1, p_nb + frame[last])
            for k in symbols:
                if k == blank:
                    continue
                if k == last:
                    # same label again only extends after a blank
                    bump(prefix + (int(k),), 1, p_b + frame[k])
                else:
                    bump(prefix + (int(k),), 1, total + frame[k])
        ranked = sorted(
            nxt.items(),
            key=lambda kv: (-_ladd(kv[1][0], kv[1][1]), len(kv[0]), kv[0]),
        )
        beams = dict(ranked[:beam_width])
    final = sorted(
        ((prefix, _ladd(pb, pnb)) for prefix, (pb, pnb) in beams.items()
         if _ladd(pb, pnb) > NEG_INF),
        key=lambda kv: (-kv[1], len(kv[0]), kv[0]),
    )
    return [
        Hypothesis(ids=list(prefix), ctc_score=float(score))
        for prefix, score in final[:n_best]
    ]


class CtcModel(nn.Module):
    """Uni-directional LSTM stack with a projection to V+1 labels.

    Streaming-style by construction: no lookahead, time dimension preserved.
    The LSTM stack doubles as the frozen shared encoder of the second pass.
    """

    def __init__(self, input_dim: int, vocab_size: int, num_layers: int,
                 hidden_dim: int, rng: np.random.Generator, dtype=np.float32):
        super().__init__()
        self.layers = [
            nn.LSTM(input_dim if i == 0 else hidden_dim, hidden_dim, rng, dtype)
            for i in range(num_layers)
        ]
        self.proj = nn.Linear(hidden_dim, vocab_size + 1, rng, dtype=dtype)
        self.blank = vocab_size
        self.vocab_size = vocab_size
        self.input_dim = input_dim
        self.hidden_dim = hidden_dim
        self.dtype = dtype

    def encode(self, feats: Tensor) -> Tensor:
        x = feats
        for layer in self.layers:
            x = layer(x)
        return x

    def forward(self, feats, lengths: Optional[np.ndarray] = None) -> Tensor:
        """(B, T, D) features -> (B, T, V+1) per-frame log-probabilities."""
        x = feats if isinstance(feats, Tensor) else Tensor(feats, dtype=self.dtype)
        return tc.log_softmax(self.proj(self.encode(x)), axis=-1)

    __call__ = forward


@dataclass
class TrainStats:
    epoch_losses: List[float]
    skipped_unreachable: int


def train_first_pass(model: CtcModel, utterances: Sequence[Tuple[np.ndarray, Sequence[int]]],
                     epochs: int, batch_size: int, lr: float,
                     rng: np.random.Generator,
                     log_every: int = 0) -> TrainStats:
    """Train on (features, target ids) pairs; raises on divergence.

    Utterances whose target cannot be aligned in their frame budget are
    skipped with a count (they would contribute infinite loss).
    """
    optim = nn.Adam(model.trainable_parameters(), lr=lr)
    order = np.arange(len(utterances))
    # bucket by length so padding stays small
    order = order[np.argsort([utterances[i][0].shape[0] for i in order], kind="stable")]
    stats = TrainStats(epoch_losses=[], skipped_unreachable=0)
    model.train()
    for epoch in range(epochs):
        batches = [order[i:i + batch_size] for i in range(0, len(order), batch_size)]
        perm = rng.permutation(len(batches))
        total, count = 0.0, 0
        for batch_idx in perm:
            batch = batches[batch_idx]
            feats = [utterances[i][0] for i in batch]
            targets = [utterances[i][1] for i in batch]
            lengths = np.array([f.shape[0] for f in feats])
            t_max = int(lengths.max())
            padded = np.zeros((len(batch), t_max, feats[0].shape[1]), dtype=model.dtype)
            for row, f in enumerate(feats):
                padded[row, :f.shape[0]] = f
            with tc.GradTape() as tape:
                log_probs = model(Tensor(padded, dtype=model.dtype), lengths)
                losses = []
                for row, target in enumerate(targets):
                    if min_frames_required(target) > lengths[row]:
                        stats.skipped_unreachable += 1
                        continue
                    losses.append(ctc_loss(log_probs[row, :int(lengths[row])], target, model.blank))
                if not losses:
                    continue
                loss = sum(losses[1:], losses[0]) * (1.0 / len(losses))
            value = loss.item()
            if not math.isfinite(value):
                raise TrainingDivergedError(
                    f"CTC loss became {value} at epoch {epoch}"
                )
            optim.zero_grad()
            tape.backward(loss)
            optim.step()
            total += value * len(losses)
            count += len(losses)
        stats.epoch_losses.append(total / max(count, 1))
        if log_every and (epoch + 1) % log_every == 0:
            print(f"[first-pass] epoch {epoch + 1}/{epochs} loss {stats.epoch_losses[-1]:.4f}")
    model.eval()
    return stats

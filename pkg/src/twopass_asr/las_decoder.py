"""Attention decoder shared by every encoder variant: a 2-block Transformer
with masked self-attention and encoder-decoder attention.

Covers teacher-forced training (label smoothing + two-pass scheduled
sampling), standalone beam search, and the parallel sequence-scoring
primitive used by second-pass rescoring: a candidate hypothesis is scored
in a single teacher-forced forward pass, and its score is the sum of
per-token conditional log-probabilities (EOS included by default).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from . import nn
from . import tensor_core as tc
from .encoders import Encoder, EncoderOutput
from .errors import ContractError, ConfigurationError, TrainingDivergedError
from .hypotheses import Hypothesis, NBestList
from .tokenizer import BOS_ID, EOS_ID, PAD_ID, UNK_ID
from .tensor_core import Tensor


@dataclass
class DecoderConfig:
    num_blocks: int = 2
    model_dim: int = 512
    num_heads: int = 4
    ff_dim: int = 2048
    label_smoothing_eps: float = 0.1
    scheduled_sampling_rate: float = 0.3
    dropout: float = 0.1
    max_decode_margin: int = 10  # max_decode_len = 2 * T' + margin

    def validate(self) -> "DecoderConfig":
        if self.num_blocks < 1:
            raise ConfigurationError("decoder needs at least one block")
        if not 0.0 <= self.scheduled_sampling_rate <= 1.0:
            raise ConfigurationError("scheduled_sampling_rate must be in [0, 1]")
        if not 0.0 <= self.label_smoothing_eps < 1.0:
            raise ConfigurationError("label_smoothing_eps must be in [0, 1)")
        return self


class TransformerDecoder(nn.Module):
    def __init__(self, cfg: DecoderConfig, vocab_size: int, rng: np.random.Generator,
                 dtype=np.float32):
        super().__init__()
        cfg.validate()
        d = np.dtype(dtype)
        self.embed = nn.Embedding(vocab_size, cfg.model_dim, rng, dtype=d)
        self.pos = nn.PositionalEncoding(cfg.model_dim, dtype=d)
        self.blocks = [
            nn.TransformerDecoderBlock(cfg.model_dim, cfg.num_heads, cfg.ff_dim,
                                       rng, cfg.dropout, d)
            for _ in range(cfg.num_blocks)
        ]
        self.norm_out = nn.LayerNorm(cfg.model_dim, dtype=d)
        self.out = nn.Linear(cfg.model_dim, vocab_size, rng, dtype=d)
        self._scale = math.sqrt(cfg.model_dim)
        self.vocab_size = vocab_size
        self.dtype = d

    def forward(self, memory: Tensor, memory_valid: np.ndarray,
                inputs: np.ndarray) -> Tensor:
        """``inputs`` (B, U) token ids -> logits (B, U, V), causally masked."""
        x = self.embed(inputs) * self._scale
        x = self.pos(x)
        for block in self.blocks:
            x = block(x, memory, memory_valid)
        return self.out(self.norm_out(x))

    __call__ = forward


class LasModel(nn.Module):
    """Encoder (any variant) + bridge projection + Transformer decoder."""

    def __init__(self, encoder: Encoder, decoder_cfg: DecoderConfig, vocab_size: int,
                 rng: np.random.Generator, dtype=np.float32):
        super().__init__()
        self.encoder = encoder
        self.bridge = (
            nn.Linear(encoder.output_dim, decoder_cfg.model_dim, rng, dtype=dtype)
            if encoder.output_dim != decoder_cfg.model_dim else None
        )
        self.decoder = TransformerDecoder(decoder_cfg, vocab_size, rng, dtype)
        self.decoder_cfg = decoder_cfg
        self.vocab_size = vocab_size
        self.dtype = np.dtype(dtype)

    def encode(self, features, lengths=None) -> EncoderOutput:
        out = self.encoder.encode(features, lengths)
        if self.bridge is not None:
            out = EncoderOutput(self.bridge(out.hidden), out.lengths, out.mask,
                                out.time_compression)
        return out

    def max_decode_len(self, enc: EncoderOutput) -> int:
        return 2 * enc.hidden.shape[1] + self.decoder_cfg.max_decode_margin

    def logits(self, enc: EncoderOutput, inputs: np.ndarray) -> Tensor:
        return self.decoder(enc.hidden, enc.mask, inputs)


def decoder_forward(model: LasModel, enc: EncoderOutput, targets: Sequence[int]) -> Tensor:
    """Logits (U, V) for one utterance; ``targets`` must begin with BOS and
    position u's logits depend only on targets[0..u] and the memory."""
    targets = list(int(i) for i in targets)
    if not targets or targets[0] != BOS_ID:
        raise ContractError("decoder targets must begin with BOS")
    if len(targets) > model.max_decode_len(enc):
        raise ContractError(
            f"target length {len(targets)} exceeds max_decode_len {model.max_decode_len(enc)}"
        )
    logits = model.logits(enc, np.asarray([targets], dtype=np.int64))
    return tc.reshape(logits, (len(targets), model.vocab_size))


# ---------------------------------------------------------------------------
# Training
# ---------------------------------------------------------------------------


def label_smoothed_loss(logits: Tensor, labels: np.ndarray, valid: np.ndarray,
                        eps: float) -> Tensor:
    """Smoothed cross-entropy over non-pad positions (uniform smoothing)."""
    logp = tc.log_softmax(logits, axis=-1)
    picked = tc.take_along(logp, labels[..., None].astype(np.int64), axis=2)
    nll = -tc.reshape(picked, labels.shape)
    loss = nll * (1.0 - eps)
    if eps > 0.0:
        loss = loss + (-tc.tmean(logp, axis=-1)) * eps
    weights = valid.astype(logits.dtype) / max(float(valid.sum()), 1.0)
    return tc.tsum(loss * Tensor(weights, dtype=logits.dtype))


def _pad_batch(batch: Sequence[Tuple[np.ndarray, Sequence[int]]], dtype):
    feats = [np.asarray(f) for f, _ in batch]
    targets = [list(map(int, t)) for _, t in batch]
    lengths = np.array([f.shape[0] for f in feats], dtype=np.int64)
    t_max = int(lengths.max())
    x = np.zeros((len(batch), t_max, feats[0].shape[1]), dtype=dtype)
    for row, f in enumerate(feats):
        x[row, :f.shape[0]] = f
    u_max = max(len(t) for t in targets)
    inputs = np.full((len(batch), u_max + 1), PAD_ID, dtype=np.int64)
    labels = np.full((len(batch), u_max + 1), PAD_ID, dtype=np.int64)
    inputs[:, 0] = BOS_ID
    for row, t in enumerate(targets):
        inputs[row, 1:1 + len(t)] = t
        labels[row, :len(t)] = t
        labels[row, len(t)] = EOS_ID
    valid = labels != PAD_ID
    return x, lengths, inputs, labels, valid


def train_step(model: LasModel, batch: Sequence[Tuple[np.ndarray, Sequence[int]]],
               optim: nn.Adam, rng: np.random.Generator) -> float:
    """One optimizer step of teacher-forced training.

    Scheduled sampling uses the two-pass scheme: a first no-grad pass
    produces the model's own predictions, then each non-BOS input position
    is independently replaced by the previous-position prediction with
    probability ``scheduled_sampling_rate``; the differentiable second pass
    runs on the mixed inputs against the true labels.
    """
    if not batch:
        raise ContractError("train_step requires a non-empty batch")
    cfg = model.decoder_cfg
    x, lengths, inputs, labels, valid = _pad_batch(batch, model.dtype)
    rate = cfg.scheduled_sampling_rate
    with tc.GradTape() as tape:
        enc = model.encode(Tensor(x, dtype=model.dtype), lengths)
        mixed = inputs
        if rate > 0.0:
            with tc.no_grad():
                first = model.logits(enc, inputs)
            preds = np.argmax(first.data, axis=-1)
            coin = rng.random(inputs.shape) < rate
            coin[:, 0] = False  # BOS is never replaced
            mixed = inputs.copy()
            mixed[coin] = preds[:, :-1][coin[:, 1:]]
        logits = model.logits(enc, mixed)
        loss = label_smoothed_loss(logits, labels, valid, cfg.label_smoothing_eps)
    value = loss.item()
    if not math.isfinite(value):
        raise TrainingDivergedError(f"LAS loss became {value}")
    optim.zero_grad()
    tape.backward(loss)
    optim.step()
    return value


def train_las(model: LasModel, utterances: Sequence[Tuple[np.ndarray, Sequence[int]]],
              epochs: int, batch_size: int, lr: float, rng: np.random.Generator,
              log_every: int = 0) -> List[float]:
    """Epoch loop over length-bucketed batches; returns per-epoch losses."""
    optim = nn.Adam(model.trainable_parameters(), lr=lr)
    order = np.argsort([u[0].shape[0] for u in utterances], kind="stable")
    batches = [order[i:i + batch_size] for i in range(0, len(order), batch_size)]
    losses = []
    model.train()
    for epoch in range(epochs):
        perm = rng.permutation(len(batches))
        total = count = 0
        for bi in perm:
            batch = [utterances[i] for i in batches[bi]]
            total += train_step(model, batch, optim, rng) * len(batch)
            count += len(batch)
        losses.append(total / max(count, 1))
        if log_every and (epoch + 1) % log_every == 0:
            print(f"[las] epoch {epoch + 1}/{epochs} loss {losses[-1]:.4f}")
    model.eval()
    return losses


# ---------------------------------------------------------------------------
# Search and scoring
# ---------------------------------------------------------------------------


def _tile_memory(enc: EncoderOutput, n: int) -> EncoderOutput:
    hidden = Tensor(np.repeat(enc.hidden.data, n, axis=0), dtype=enc.hidden.dtype)
    return EncoderOutput(hidden, np.repeat(enc.lengths, n, axis=0),
                         np.repeat(enc.mask, n, axis=0), enc.time_compression)


def _next_log_probs(model: LasModel, enc: EncoderOutput,
                    prefixes: List[Tuple[int, ...]]) -> np.ndarray:
    """Log P(next token | prefix, memory) for each prefix, batched."""
    n = len(prefixes)
    u = max(len(p) for p in prefixes) + 1
    inputs = np.full((n, u), PAD_ID, dtype=np.int64)
    inputs[:, 0] = BOS_ID
    for row, p in enumerate(prefixes):
        inputs[row, 1:1 + len(p)] = p
    memory = _tile_memory(enc, n) if enc.hidden.shape[0] == 1 and n > 1 else enc
    logits = model.logits(memory, inputs).data
    rows = logits[np.arange(n), [len(p) for p in prefixes]]
    rows = rows - rows.max(axis=-1, keepdims=True)
    return rows - np.log(np.exp(rows).sum(axis=-1, keepdims=True))


def beam_search_decode(model: LasModel, enc: EncoderOutput, beam_size: int = 10,
                       length_normalize: bool = True, include_eos: bool = True,
                       utt_id: str = "", max_len: Optional[int] = None) -> NBestList:
    """Standalone decoding. Hypotheses are expanded until EOS or the length
    cap (2 * T' + margin unless overridden); finished candidates are ranked
    by log-prob divided by token count (or raw sums when length
    normalization is off). ``las_score`` is always the raw log-prob sum."""
    if beam_size < 1:
        raise ContractError(f"beam_size must be >= 1, got {beam_size}")
    model.eval()
    if max_len is None:
        max_len = model.max_decode_len(enc)
    with tc.no_grad():
        alive: List[Tuple[Tuple[int, ...], float]] = [((), 0.0)]
        finished: List[Tuple[Tuple[int, ...], float]] = []
        for _ in range(max_len):
            rows = _next_log_probs(model, enc, [p for p, _ in alive])
            rows[:, PAD_ID] = -np.inf
            rows[:, BOS_ID] = -np.inf
            base = np.asarray([s for _, s in alive])
            # every beam's EOS continuation finishes; kept unconditionally
            for (seq, raw), eos_lp in zip(alive, rows[:, EOS_ID]):
                total = raw + float(eos_lp) if include_eos else raw
                if np.isfinite(total):
                    finished.append((seq, total))
            rows[:, EOS_ID] = -np.inf
            scores = base[:, None] + rows
            flat = scores.ravel()
            v = rows.shape[1]
            top = np.argsort(-flat, kind="stable")[:beam_size]
            new_alive = [
                (alive[int(idx) // v][0] + (int(idx) % v,), float(flat[idx]))
                for idx in top if np.isfinite(flat[idx])
            ]
            alive = new_alive
            if not alive or len(finished) >= 8 * beam_size:
                break
        if alive:
            # length cap reached: close out remaining beams with EOS
            rows = _next_log_probs(model, enc, [p for p, _ in alive])
            for (seq, raw), row in zip(alive, rows):
                total = raw + float(row[EOS_ID]) if include_eos else raw
                if np.isfinite(total):
                    finished.append((seq, total))

    def rank_key(item):
        seq, score = item
        denom = len(seq) + 1 if length_normalize else 1
        return (-score / denom, len(seq), seq)

    finished.sort(key=rank_key)
    hyps = [Hypothesis(ids=list(seq), las_score=float(score))
            for seq, score in finished[:beam_size]]
    return NBestList(utt_id=utt_id, hypotheses=hyps, source="standalone")


def score_sequence(model: LasModel, enc: EncoderOutput, ids: Sequence[int],
                   include_eos: bool = True) -> float:
    """LAS score of one candidate: a single teacher-forced parallel pass."""
    return score_sequences(model, enc, [ids], include_eos=include_eos)[0]


def score_sequences(model: LasModel, enc: EncoderOutput, sequences: Sequence[Sequence[int]],
                    include_eos: bool = True) -> List[float]:
    """Batched hypothesis scoring against a single utterance's memory.

    Each sequence contributes sum_u log P(ids[u] | ids[<u], memory), plus
    the terminal EOS conditional unless ``include_eos`` is False.
    """
    if not sequences:
        return []
    seqs = [list(map(int, s)) for s in sequences]
    for s in seqs:
        if not s:
            raise ContractError("cannot score an empty hypothesis")
        if PAD_ID in s or BOS_ID in s:
            raise ContractError("hypothesis ids must not contain PAD or BOS")
    model.eval()
    n = len(seqs)
    u_max = max(len(s) for s in seqs)
    inputs = np.full((n, u_max + 1), PAD_ID, dtype=np.int64)
    labels = np.full((n, u_max + 1), PAD_ID, dtype=np.int64)
    inputs[:, 0] = BOS_ID
    weights = np.zeros((n, u_max + 1), dtype=np.float64)
    for row, s in enumerate(seqs):
        inputs[row, 1:1 + len(s)] = s
        labels[row, :len(s)] = s
        labels[row, len(s)] = EOS_ID
        weights[row, :len(s)] = 1.0
        if include_eos:
            weights[row, len(s)] = 1.0
    with tc.no_grad():
        memory = _tile_memory(enc, n) if enc.hidden.shape[0] == 1 and n > 1 else enc
        logits = model.logits(memory, inputs).data
    shifted = logits - logits.max(axis=-1, keepdims=True)
    logp = shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))
    picked = np.take_along_axis(logp, labels[..., None], axis=2)[..., 0]
    return [float(v) for v in (picked * weights).sum(axis=1)]

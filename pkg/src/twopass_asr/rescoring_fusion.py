"""Second-pass rescoring: n-gram language model scoring, linear score
fusion, n-best re-ranking, and fusion-weight grid search.

The fused score of a hypothesis is the exact linear combination

    final_score = w1 * ctc_score + w2 * las_score + w3 * lm_score + w4 * len

with no renormalization; ``len`` is the subword token count excluding
BOS/EOS. Weights are picked by corpus-WER grid search on held-out data,
with all component scores computed once and reused across grid points.

The LM is a subword n-gram with add-k smoothing. Backoff happens at
context level (an unseen context falls back to the shorter context's
distribution), which keeps every returned conditional distribution exactly
normalized over the vocabulary; per-token backoff would break that.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import tensor_core as tc
from .errors import ContractError, DataFormatError, ParameterError
from .eval_bench import corpus_wer, normalize_text, wer
from .hypotheses import Hypothesis, NBestList
from .las_decoder import LasModel, score_sequences
from .encoders import EncoderOutput
from .tokenizer import BOS_ID, EOS_ID


@dataclass
class FusionWeights:
    lambda1: float = 1.0  # ctc_score
    lambda2: float = 0.0  # las_score
    lambda3: float = 0.0  # lm_score
    lambda4: float = 0.0  # len
    validation_wer: Optional[float] = None

    def as_array(self) -> np.ndarray:
        return np.array([self.lambda1, self.lambda2, self.lambda3, self.lambda4])

    def save(self, path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8") as fh:
            for i, value in enumerate(self.as_array(), start=1):
                fh.write(f"lambda{i}={float(value)!r}\n")
            if self.validation_wer is not None:
                fh.write(f"validation_wer={float(self.validation_wer)!r}\n")

    @classmethod
    def load(cls, path) -> "FusionWeights":
        values: Dict[str, float] = {}
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                key, _, raw = line.partition("=")
                if not raw:
                    raise DataFormatError(f"{path}: malformed line {line!r}")
                values[key] = float(raw)
        try:
            return cls(values["lambda1"], values["lambda2"], values["lambda3"],
                       values["lambda4"], values.get("validation_wer"))
        except KeyError as exc:
            raise DataFormatError(f"{path}: missing {exc}") from None


@dataclass
class ScoredHypothesis:
    hypothesis: Hypothesis
    final_score: float


class NgramLm:
    """Add-k smoothed n-gram over subword ids with context-level backoff.

    For every seen context the conditional distribution sums to one over the
    full id vocabulary; unseen contexts defer to the next shorter context.
    """

    def __init__(self, order: int, vocab_size: int, smoothing_k: float = 0.1):
        if order < 1:
            raise ParameterError(f"n-gram order must be >= 1, got {order}")
        if smoothing_k <= 0:
            raise ParameterError(f"smoothing constant must be > 0, got {smoothing_k}")
        self.order = order
        self.vocab_size = vocab_size
        self.k = smoothing_k
        # counts[m]: context tuple of length m -> Counter of next token
        self.counts: List[Dict[Tuple[int, ...], Counter]] = [
            defaultdict(Counter) for _ in range(order)
        ]
        self.totals: List[Dict[Tuple[int, ...], int]] = [
            defaultdict(int) for _ in range(order)
        ]

    def observe(self, ids: Sequence[int]) -> None:
        events = [int(i) for i in ids] + [EOS_ID]
        history = [BOS_ID] * (self.order - 1) + events
        for pos in range(len(events)):
            token = events[pos]
            full_ctx = tuple(history[pos:pos + self.order - 1])
            for m in range(self.order):
                ctx = full_ctx[len(full_ctx) - m:]
                self.counts[m][ctx][token] += 1
                self.totals[m][ctx] += 1

    def _context_for(self, context: Tuple[int, ...]) -> Tuple[int, ...]:
        ctx = tuple(context[max(0, len(context) - (self.order - 1)):])
        while ctx and self.totals[len(ctx)].get(ctx, 0) == 0:
            ctx = ctx[1:]
        return ctx

    def log_prob(self, token: int, context: Sequence[int]) -> float:
        ctx = self._context_for(tuple(int(c) for c in context))
        m = len(ctx)
        count = self.counts[m][ctx].get(int(token), 0)
        total = self.totals[m].get(ctx, 0)
        return math.log((count + self.k) / (total + self.k * self.vocab_size))

    def distribution(self, context: Sequence[int]) -> np.ndarray:
        """Conditional distribution over the full vocabulary (sums to 1)."""
        ctx = self._context_for(tuple(int(c) for c in context))
        m = len(ctx)
        total = self.totals[m].get(ctx, 0)
        probs = np.full(self.vocab_size, self.k / (total + self.k * self.vocab_size))
        for token, count in self.counts[m][ctx].items():
            probs[token] += count / (total + self.k * self.vocab_size)
        return probs

    def score_ids(self, ids: Sequence[int]) -> float:
        """Sum of conditional log-probs with BOS padding and terminal EOS."""
        events = [int(i) for i in ids] + [EOS_ID]
        history = [BOS_ID] * (self.order - 1) + events
        return sum(
            self.log_prob(events[pos], history[pos:pos + self.order - 1])
            for pos in range(len(events))
        )


def train_ngram(sequences: Sequence[Sequence[int]], n: int, smoothing_k: float = 0.1,
                vocab_size: Optional[int] = None) -> NgramLm:
    """Count-based training; deterministic for a given corpus."""
    sequences = list(sequences)
    if not sequences:
        raise ParameterError("n-gram training corpus is empty")
    if vocab_size is None:
        vocab_size = max((max(s, default=0) for s in sequences), default=0) + 1
        vocab_size = max(vocab_size, EOS_ID + 1)
    lm = NgramLm(n, vocab_size, smoothing_k)
    for seq in sequences:
        lm.observe(seq)
    return lm


def lm_score(lm: NgramLm, ids: Sequence[int]) -> float:
    return lm.score_ids(ids)


# ---------------------------------------------------------------------------
# Fusion
# ---------------------------------------------------------------------------

_COMPONENTS = (("ctc_score", "lambda1"), ("las_score", "lambda2"), ("lm_score", "lambda3"))


def fuse_scores(h: Hypothesis, w: FusionWeights) -> ScoredHypothesis:
    """Exact linear combination of the hypothesis' component scores."""
    final = w.lambda4 * h.len
    for attr, lam in _COMPONENTS:
        weight = getattr(w, lam)
        value = getattr(h, attr)
        if value is None:
            if weight != 0.0:
                raise ContractError(f"{attr} unset but {lam}={weight} is nonzero")
            continue
        final += weight * value
    return ScoredHypothesis(h, float(final))


def _empty_hypothesis_las_score(model: LasModel, enc: EncoderOutput,
                                include_eos: bool) -> float:
    """log P(EOS | BOS, memory): the empty transcript's LAS score."""
    if not include_eos:
        return 0.0
    with tc.no_grad():
        logits = model.logits(enc, np.asarray([[BOS_ID]], dtype=np.int64)).data[0, 0]
    shifted = logits - logits.max()
    logp = shifted - np.log(np.exp(shifted).sum())
    return float(logp[EOS_ID])


def rescore_nbest(nbest: NBestList, las: LasModel, enc: EncoderOutput,
                  lm: Optional[NgramLm], w: FusionWeights,
                  include_eos: bool = True) -> NBestList:
    """Attach LAS and LM scores to every hypothesis, then re-rank by the
    fused score (descending). The hypothesis set itself never changes."""
    if not nbest.hypotheses:
        return NBestList(utt_id=nbest.utt_id, hypotheses=[], source="rescored")
    nonempty = [h for h in nbest.hypotheses if h.ids]
    las_scores = iter(score_sequences(las, enc, [h.ids for h in nonempty],
                                      include_eos=include_eos) if nonempty else [])
    rescored: List[Hypothesis] = []
    for h in nbest.hypotheses:
        las_value = (next(las_scores) if h.ids
                     else _empty_hypothesis_las_score(las, enc, include_eos))
        rescored.append(replace(h, las_score=float(las_value),
                                lm_score=float(lm.score_ids(h.ids)) if lm else h.lm_score))
    order = sorted(range(len(rescored)),
                   key=lambda i: (-fuse_scores(rescored[i], w).final_score, i))
    return NBestList(utt_id=nbest.utt_id,
                     hypotheses=[rescored[i] for i in order], source="rescored")


# ---------------------------------------------------------------------------
# Grid search
# ---------------------------------------------------------------------------


def _frange(lo: float, hi: float, step: float) -> List[float]:
    n = int(round((hi - lo) / step))
    return [round(lo + i * step, 10) for i in range(n + 1)]


@dataclass
class GridSpec:
    """Grid values per weight; the default fixes lambda1 = 1 (only relative
    weights matter for the argmax) and sweeps the others coarsely, then one
    local refinement pass at ``refine_step`` around the optimum."""

    lambda1_values: List[float] = field(default_factory=lambda: [1.0])
    lambda2_values: List[float] = field(default_factory=lambda: _frange(0.0, 1.0, 0.1))
    lambda3_values: List[float] = field(default_factory=lambda: _frange(0.0, 1.0, 0.1))
    lambda4_values: List[float] = field(default_factory=lambda: _frange(-0.5, 0.5, 0.1))
    refine_step: float = 0.02
    refine_span: int = 2


def _score_matrix(nbest: NBestList) -> np.ndarray:
    rows = []
    for h in nbest.hypotheses:
        if h.ctc_score is None or h.las_score is None or h.lm_score is None:
            raise ContractError(
                f"grid search requires fully scored hypotheses (utt {nbest.utt_id})"
            )
        rows.append([h.ctc_score, h.las_score, h.lm_score, float(h.len)])
    return np.asarray(rows)


def grid_search_lambdas(validation: Sequence[Tuple[NBestList, str]],
                        grid: Optional[GridSpec] = None) -> FusionWeights:
    """Pick the grid point minimizing corpus WER of the re-ranked top-1.

    Scores are precomputed once; every grid point only re-ranks. Ties break
    toward the earliest point in enumeration order, so results are exactly
    reproducible.
    """
    if not validation:
        raise ContractError("grid search needs a non-empty validation set")
    grid = grid or GridSpec()
    matrices: List[np.ndarray] = []
    error_tables: List[np.ndarray] = []
    total_ref_words = 0
    for nbest, reference in validation:
        if not nbest.hypotheses:
            raise ContractError(f"empty n-best list for {nbest.utt_id}")
        matrices.append(_score_matrix(nbest))
        ref = normalize_text(reference)
        errs = []
        for h in nbest.hypotheses:
            report = wer(ref, normalize_text(h.text or ""))
            errs.append(report.errors)
        error_tables.append(np.asarray(errs))
        total_ref_words += len(ref.split())

    def corpus_errors(weights: np.ndarray) -> int:
        total = 0
        for mat, errs in zip(matrices, error_tables):
            pick = int(np.argmax(mat @ weights))  # first max wins ties
            total += int(errs[pick])
        return total

    def sweep(points) -> Tuple[Tuple[float, ...], int]:
        best_point, best_err = None, None
        for point in points:
            err = corpus_errors(np.asarray(point))
            if best_err is None or err < best_err:
                best_point, best_err = point, err
        return best_point, best_err

    coarse_points = itertools.product(grid.lambda1_values, grid.lambda2_values,
                                      grid.lambda3_values, grid.lambda4_values)
    best, best_err = sweep(coarse_points)

    if grid.refine_step > 0 and grid.refine_span > 0:
        offsets = [i * grid.refine_step for i in range(-grid.refine_span, grid.refine_span + 1)]
        refined = itertools.product(
            [best[0]],
            [round(best[1] + o, 10) for o in offsets],
            [round(best[2] + o, 10) for o in offsets],
            [round(best[3] + o, 10) for o in offsets],
        )
        cand, cand_err = sweep(refined)
        if cand_err < best_err:
            best, best_err = cand, cand_err

    return FusionWeights(*best, validation_wer=best_err / total_ref_words)


def oracle_errors(nbest: NBestList, reference: str) -> Tuple[int, int]:
    """(best achievable errors in the list, reference word count)."""
    ref = normalize_text(reference)
    best = None
    for h in nbest.hypotheses:
        report = wer(ref, normalize_text(h.text or ""))
        best = report.errors if best is None else min(best, report.errors)
    return int(best if best is not None else len(ref.split())), len(ref.split())

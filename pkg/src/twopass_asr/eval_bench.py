"""WER evaluation and encoder latency benchmarking.

WER is word-level minimum edit distance with uniform costs; the pipeline
normalizes text (case folding, punctuation stripping) before scoring.
Latency measures a single forward pass on a fixed-shape input with a
monotonic clock, warmup runs excluded.
"""

from __future__ import annotations

import string
import time
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from . import tensor_core as tc
from .encoders import REFERENCE_RESULTS
from .errors import ParameterError, UndefinedMetricError

_PUNCT_TABLE = str.maketrans("", "", string.punctuation)


def normalize_text(text: str) -> str:
    """Case folding and punctuation stripping applied before WER."""
    return " ".join(text.lower().translate(_PUNCT_TABLE).split())


@dataclass
class UtteranceErrors:
    substitutions: int
    deletions: int
    insertions: int
    ref_words: int

    @property
    def errors(self) -> int:
        return self.substitutions + self.deletions + self.insertions


@dataclass
class WerReport:
    substitutions: int
    deletions: int
    insertions: int
    ref_words: int
    per_utterance: List[UtteranceErrors] = field(default_factory=list)

    @property
    def errors(self) -> int:
        return self.substitutions + self.deletions + self.insertions

    @property
    def wer(self) -> float:
        return self.errors / self.ref_words


def _edit_counts(ref: Sequence[str], hyp: Sequence[str]) -> Tuple[int, int, int]:
    """(S, D, I) from a minimum-cost word alignment, uniform costs.

    Ties prefer substitution/match, then deletion, then insertion, which
    keeps the split deterministic (the total S+D+I is unique regardless).
    """
    n, m = len(ref), len(hyp)
    dp = np.zeros((n + 1, m + 1), dtype=np.int32)
    dp[:, 0] = np.arange(n + 1)
    dp[0, :] = np.arange(m + 1)
    for i in range(1, n + 1):
        sub_cost = (np.asarray(hyp) != ref[i - 1]).astype(np.int32)
        for j in range(1, m + 1):
            dp[i, j] = min(dp[i - 1, j - 1] + sub_cost[j - 1],
                           dp[i - 1, j] + 1,
                           dp[i, j - 1] + 1)
    s = d = ins = 0
    i, j = n, m
    while i > 0 or j > 0:
        if i > 0 and j > 0 and dp[i, j] == dp[i - 1, j - 1] + (ref[i - 1] != hyp[j - 1]):
            s += int(ref[i - 1] != hyp[j - 1])
            i, j = i - 1, j - 1
        elif i > 0 and dp[i, j] == dp[i - 1, j] + 1:
            d += 1
            i -= 1
        else:
            ins += 1
            j -= 1
    return s, d, ins


def wer(reference: str, hypothesis: str) -> WerReport:
    """Word error rate of one (reference, hypothesis) pair.

    Tokenization is whitespace-only: extra spaces never change the result.
    """
    ref_words = reference.split()
    hyp_words = hypothesis.split()
    if not ref_words:
        raise UndefinedMetricError("WER is undefined for an empty reference")
    s, d, i = _edit_counts(ref_words, hyp_words)
    report = WerReport(s, d, i, len(ref_words))
    report.per_utterance.append(UtteranceErrors(s, d, i, len(ref_words)))
    return report


def corpus_wer(references: Sequence[str], hypotheses: Sequence[str]) -> WerReport:
    if len(references) != len(hypotheses):
        raise ParameterError(
            f"{len(references)} references vs {len(hypotheses)} hypotheses"
        )
    report = WerReport(0, 0, 0, 0)
    for ref, hyp in zip(references, hypotheses):
        one = wer(ref, hyp)
        report.substitutions += one.substitutions
        report.deletions += one.deletions
        report.insertions += one.insertions
        report.ref_words += one.ref_words
        report.per_utterance.extend(one.per_utterance)
    return report


def relative_improvement(baseline_wer: float, new_wer: float) -> float:
    """(baseline - new) / baseline."""
    if baseline_wer <= 0:
        raise UndefinedMetricError("relative improvement undefined for baseline <= 0")
    return (baseline_wer - new_wer) / baseline_wer


# ---------------------------------------------------------------------------
# Latency benchmarking
# ---------------------------------------------------------------------------


@dataclass
class LatencyReport:
    model: str
    mean_ms: float
    median_ms: float
    p95_ms: float
    num_runs: int
    warmup_runs: int
    input_shape: Tuple[int, ...]
    total_params: Optional[int] = None
    trainable_params: Optional[int] = None


def benchmark_callable(fn: Callable[[], object], model: str,
                       input_shape: Tuple[int, ...], num_runs: int = 100,
                       warmup: int = 5) -> LatencyReport:
    """Wall-clock latency of ``fn`` per call; warmup calls are discarded."""
    if num_runs < 30:
        raise ParameterError(f"num_runs must be >= 30, got {num_runs}")
    for _ in range(warmup):
        fn()
    samples = np.empty(num_runs)
    for i in range(num_runs):
        start = time.perf_counter()
        fn()
        samples[i] = time.perf_counter() - start
    samples *= 1000.0
    return LatencyReport(
        model=model,
        mean_ms=float(samples.mean()),
        median_ms=float(np.median(samples)),
        p95_ms=float(np.percentile(samples, 95)),
        num_runs=num_runs,
        warmup_runs=warmup,
        input_shape=tuple(input_shape),
    )


def benchmark_encoder(encoder, input_shape: Tuple[int, int], model: str = "",
                      num_runs: int = 100, warmup: int = 5,
                      rng: Optional[np.random.Generator] = None) -> LatencyReport:
    """Single forward pass of one encoder on a fixed (T, D) input, batch 1.

    Feature extraction and decoding are explicitly excluded; for the shared
    frozen encoder this still times the whole stack, so the add-on-only
    overhead is the difference against the bare first-pass encoder.
    """
    rng = rng or np.random.default_rng(0)
    encoder.eval()
    feats = rng.normal(size=input_shape).astype(np.float32)

    def run():
        with tc.no_grad():
            encoder.encode(feats)

    report = benchmark_callable(run, model or type(encoder).__name__,
                                input_shape, num_runs, warmup)
    total, trainable = encoder.num_params()
    report.total_params = total
    report.trainable_params = trainable
    return report


# ---------------------------------------------------------------------------
# Results table
# ---------------------------------------------------------------------------


@dataclass
class ResultRow:
    model: str
    standalone_wer: Optional[float] = None
    rescoring_wer: Optional[float] = None
    latency_ms: Optional[float] = None
    params_m: Optional[float] = None


CSV_HEADER = "model,standalone_wer,rescoring_wer,avg_latency_ms,trainable_params_m"
_COLUMNS = ("model", "standalone mode", "re-scoring mode", "avg latency (ms)",
            "trainable params (M)")


def _fmt(value: Optional[float]) -> str:
    return "-" if value is None else f"{value:g}"


def emit_results_table(rows: Sequence[ResultRow]) -> Tuple[str, str]:
    """(aligned text table, machine-readable CSV) in the reference column
    order: model, standalone WER, rescoring WER, latency, params."""
    cells = [list(_COLUMNS)]
    for r in rows:
        cells.append([r.model, _fmt(r.standalone_wer), _fmt(r.rescoring_wer),
                      _fmt(r.latency_ms), _fmt(r.params_m)])
    widths = [max(len(row[c]) for row in cells) for c in range(5)]
    lines = []
    for i, row in enumerate(cells):
        lines.append("  ".join(cell.ljust(widths[c]) for c, cell in enumerate(row)).rstrip())
        if i == 0:
            lines.append("  ".join("-" * widths[c] for c in range(5)))
    text = "\n".join(lines) + "\n"

    csv_lines = [CSV_HEADER]
    for r in rows:
        vals = [r.standalone_wer, r.rescoring_wer, r.latency_ms, r.params_m]
        csv_lines.append(",".join([r.model] + ["" if v is None else repr(float(v)) for v in vals]))
    return text, "\n".join(csv_lines) + "\n"


def parse_results_csv(text: str) -> List[ResultRow]:
    lines = [ln for ln in text.strip().splitlines() if ln]
    if not lines or lines[0] != CSV_HEADER:
        raise ParameterError(f"unexpected results header: {lines[:1]}")
    rows = []
    for ln in lines[1:]:
        model, *vals = ln.split(",")
        vals = [None if v == "" else float(v) for v in vals]
        rows.append(ResultRow(model, *vals))
    return rows


def reference_rows() -> List[ResultRow]:
    """The documented large-scale reference results as table rows."""
    order = ("first_pass_ctc_lstm", "bilstm_pyramidal", "transformer",
             "vgg_transformer", "conformer", "shared_frozen_bilstm",
             "shared_frozen_transformer")
    return [ResultRow(name, *REFERENCE_RESULTS[name]) for name in order]

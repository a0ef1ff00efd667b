"""Dataset manifests and the synthetic corpus generator.

The synthetic grammar replaces proprietary voice-search audio: every word in
a small inventory owns a fixed feature template (a few frames of seeded
uniform noise in [0, 1]^D), utterances concatenate word templates and add
Gaussian noise. The task is learnable by tiny models, while the noise
creates genuine first-pass confusions so the n-best lists have rescoring
headroom. Generation is fully determined by the seed: every utterance draws
from its own (seed, split, index) generator, so worker count never changes
the corpus.
"""

from __future__ import annotations

import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import DataError, ParameterError
from .frontend import FeatureSequence, save_features

_CONSONANTS = "bdkmnpst"
_VOWELS = "aeio"

MANIFEST_COLUMNS = ("utt_id", "feature_path", "text")


@dataclass
class ManifestRow:
    utt_id: str
    feature_path: str
    text: str


@dataclass
class Manifest:
    rows: List[ManifestRow]
    split: str = "train"

    def __len__(self) -> int:
        return len(self.rows)

    def texts(self) -> List[str]:
        return [r.text for r in self.rows]

    def save(self, path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\t".join(MANIFEST_COLUMNS) + "\n")
            for r in self.rows:
                fh.write(f"{r.utt_id}\t{r.feature_path}\t{r.text}\n")

    @classmethod
    def load(cls, path, split: str = "", check_files: bool = True) -> "Manifest":
        path = Path(path)
        if not path.exists():
            raise DataError(f"manifest not found: {path}")
        rows: List[ManifestRow] = []
        seen = set()
        with open(path, encoding="utf-8") as fh:
            header = fh.readline().rstrip("\n").split("\t")
            if tuple(header) != MANIFEST_COLUMNS:
                raise DataError(f"{path}: unexpected manifest header {header}")
            for line_no, line in enumerate(fh, 2):
                line = line.rstrip("\n")
                if not line:
                    continue
                parts = line.split("\t")
                if len(parts) != 3:
                    raise DataError(f"{path}:{line_no}: expected 3 columns, got {len(parts)}")
                row = ManifestRow(*parts)
                if row.utt_id in seen:
                    raise DataError(f"{path}: duplicate utt_id {row.utt_id}")
                seen.add(row.utt_id)
                if check_files and not Path(row.feature_path).exists():
                    raise DataError(f"{path}: missing feature file {row.feature_path}")
                rows.append(row)
        return cls(rows=rows, split=split or path.stem)


def _word_inventory(num_words: int) -> List[str]:
    """Deterministic distinct CVCV pseudo-words over a small charset.

    A coprime stride through the combination space spreads initial letters,
    so the subword tokenizer sees a balanced corpus."""
    combos = [c1 + v1 + c2 + v2
              for c1 in _CONSONANTS for v1 in _VOWELS
              for c2 in _CONSONANTS for v2 in _VOWELS]
    if num_words > len(combos):
        raise ParameterError(f"cannot build {num_words} distinct words")
    stride = 137  # coprime with len(combos) = 1024
    return [combos[(i * stride) % len(combos)] for i in range(num_words)]


@dataclass
class SyntheticGrammar:
    num_words: int = 30
    dim: int = 80
    min_frames: int = 4
    max_frames: int = 8
    noise_sigma: float = 0.1
    min_words: int = 2
    max_words: int = 5
    min_template_dist: float = 1.0
    seed: int = 0
    words: List[str] = field(default_factory=list)
    templates: Dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        if self.noise_sigma < 0:
            raise ParameterError("noise_sigma must be >= 0")
        if not (1 <= self.min_frames <= self.max_frames):
            raise ParameterError("frame bounds must satisfy 1 <= min <= max")
        if not (1 <= self.min_words <= self.max_words):
            raise ParameterError("word-count bounds must satisfy 1 <= min <= max")
        if not self.words:
            self.words = _word_inventory(self.num_words)
            self._build_templates()

    def _build_templates(self) -> None:
        rng = np.random.default_rng([self.seed, 0xC0F])
        self.templates = {}
        for word in self.words:
            while True:
                length = int(rng.integers(self.min_frames, self.max_frames + 1))
                cand = rng.uniform(0.0, 1.0, (length, self.dim)).astype(np.float32)
                if all(self._distance(cand, other) >= self.min_template_dist
                       for other in self.templates.values()):
                    break
            self.templates[word] = cand

    @staticmethod
    def _distance(a: np.ndarray, b: np.ndarray) -> float:
        n = min(a.shape[0], b.shape[0])
        return float(np.linalg.norm(a[:n] - b[:n]))

    def sample_utterance(self, rng: np.random.Generator) -> Tuple[List[str], np.ndarray]:
        """Word sequence (no immediate repeats, so every target stays
        alignable after frame stacking) plus its noisy features."""
        n = int(rng.integers(self.min_words, self.max_words + 1))
        words: List[str] = []
        for _ in range(n):
            while True:
                word = self.words[int(rng.integers(0, len(self.words)))]
                if not words or word != words[-1] or len(self.words) == 1:
                    break
            words.append(word)
        clean = np.concatenate([self.templates[w] for w in words], axis=0)
        noise = rng.normal(0.0, self.noise_sigma, clean.shape) if self.noise_sigma else 0.0
        return words, (clean + noise).astype(np.float32)


_SPLIT_TAGS = {"train": 0, "valid": 1, "test": 2}


def _split_tag(split: str) -> int:
    return _SPLIT_TAGS.get(split, 16 + zlib.crc32(split.encode()) % 1000)


def _utterance_rng(grammar: SyntheticGrammar, split: str, index: int) -> np.random.Generator:
    return np.random.default_rng([grammar.seed, _split_tag(split), index])


def _generate_chunk(grammar: SyntheticGrammar, split: str, out_dir: str,
                    indices: Sequence[int]) -> List[ManifestRow]:
    rows = []
    feat_dir = Path(out_dir) / "features" / split
    for i in indices:
        rng = _utterance_rng(grammar, split, i)
        words, feats = grammar.sample_utterance(rng)
        utt_id = f"{split}-{i:05d}"
        path = feat_dir / f"{utt_id}.feat"
        save_features(path, FeatureSequence(feats))
        rows.append(ManifestRow(utt_id, str(path), " ".join(words)))
    return rows


def generate_synthetic_corpus(grammar: SyntheticGrammar, num_utts: int, out_dir,
                              split: str = "train", workers: int = 1) -> Manifest:
    """Write feature files plus a manifest; bitwise reproducible per seed."""
    if num_utts < 1:
        raise ParameterError(f"num_utts must be >= 1, got {num_utts}")
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise DataError(f"cannot create output dir {out_dir}: {exc}") from exc
    indices = list(range(num_utts))
    if workers > 1:
        chunks = [indices[i::workers] for i in range(workers)]
        rows: List[ManifestRow] = []
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for part in pool.map(_generate_chunk, [grammar] * workers,
                                 [split] * workers, [str(out_dir)] * workers, chunks):
                rows.extend(part)
        rows.sort(key=lambda r: r.utt_id)
    else:
        rows = _generate_chunk(grammar, split, str(out_dir), indices)
    manifest = Manifest(rows=rows, split=split)
    manifest.save(out_dir / f"{split}.tsv")
    return manifest

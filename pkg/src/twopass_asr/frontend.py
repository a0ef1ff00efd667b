"""Acoustic feature extraction: log-mel filterbanks, frame stacking, and
spec-augment masking.

Conventions pinned here (the literature leaves them open): HTK mel scale,
triangular filters spanning 0 Hz to Nyquist, Hann window, power spectrum,
natural log floored at log(1e-10). Frame stacking subsamples by the stack
factor, so three stacked 80-dim frames become one 240-dim frame.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import DataFormatError, InputTooShortError, ParameterError

LOG_FLOOR = 1e-10

FEATURE_MAGIC = b"FEAT"
FEATURE_VERSION = 1


@dataclass
class Waveform:
    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.sample_rate <= 0:
            raise ParameterError(f"sample_rate must be positive, got {self.sample_rate}")


@dataclass
class FeatureSequence:
    """T x D matrix of acoustic features plus frame metadata."""

    frames: np.ndarray
    frame_shift_ms: float = 10.0

    def __post_init__(self):
        self.frames = np.asarray(self.frames, dtype=np.float32)
        if self.frames.ndim != 2:
            raise ParameterError(f"frames must be 2-D, got shape {self.frames.shape}")

    @property
    def num_frames(self) -> int:
        return self.frames.shape[0]

    @property
    def dim(self) -> int:
        return self.frames.shape[1]


@dataclass
class SpecAugmentPolicy:
    num_freq_masks: int = 1
    max_freq_width: int = 10
    num_time_masks: int = 1
    max_time_width: int = 8
    fill_mode: str = "mean"  # "mean" or "zero"

    def __post_init__(self):
        if min(self.num_freq_masks, self.max_freq_width,
               self.num_time_masks, self.max_time_width) < 0:
            raise ParameterError("spec-augment counts and widths must be >= 0")


def hz_to_mel(hz):
    return 2595.0 * np.log10(1.0 + np.asarray(hz, dtype=np.float64) / 700.0)


def mel_to_hz(mel):
    return 700.0 * (np.power(10.0, np.asarray(mel, dtype=np.float64) / 2595.0) - 1.0)


def mel_filterbank(n_mels: int, n_fft: int, sample_rate: int) -> np.ndarray:
    """Triangular filters on the HTK mel scale, 0 Hz to Nyquist.

    Returns (n_mels, n_fft // 2 + 1).
    """
    nyquist = sample_rate / 2.0
    mel_points = np.linspace(hz_to_mel(0.0), hz_to_mel(nyquist), n_mels + 2)
    hz_points = mel_to_hz(mel_points)
    bins = np.floor((n_fft + 1) * hz_points / sample_rate).astype(int)
    fb = np.zeros((n_mels, n_fft // 2 + 1))
    for m in range(1, n_mels + 1):
        left, center, right = bins[m - 1], bins[m], bins[m + 1]
        for k in range(left, center):
            if center > left:
                fb[m - 1, k] = (k - left) / (center - left)
        for k in range(center, right):
            if right > center:
                fb[m - 1, k] = (right - k) / (right - center)
    return fb


def mel_filter_centers_hz(n_mels: int, sample_rate: int) -> np.ndarray:
    """Center frequency of each triangular filter, in Hz."""
    nyquist = sample_rate / 2.0
    mel_points = np.linspace(hz_to_mel(0.0), hz_to_mel(nyquist), n_mels + 2)
    return mel_to_hz(mel_points)[1:-1]


def log_mel(w: Waveform, window_ms: float = 20.0, hop_ms: float = 10.0,
            n_mels: int = 80) -> FeatureSequence:
    """Log mel-filterbank energies: T = floor((N - win) / hop) + 1 frames."""
    win = int(round(w.sample_rate * window_ms / 1000.0))
    hop = int(round(w.sample_rate * hop_ms / 1000.0))
    n = len(w.samples)
    if n < win:
        raise InputTooShortError(
            f"audio has {n} samples, shorter than one {win}-sample window"
        )
    num_frames = (n - win) // hop + 1
    window = np.hanning(win)
    fb = mel_filterbank(n_mels, win, w.sample_rate)
    frames = np.empty((num_frames, n_mels), dtype=np.float64)
    for t in range(num_frames):
        segment = w.samples[t * hop:t * hop + win] * window
        spectrum = np.abs(np.fft.rfft(segment)) ** 2
        frames[t] = np.log(np.maximum(fb @ spectrum, LOG_FLOOR))
    return FeatureSequence(frames.astype(np.float32), frame_shift_ms=hop_ms)


def stack_frames(f: FeatureSequence, k: int = 3) -> FeatureSequence:
    """Concatenate each group of ``k`` consecutive frames into one.

    The sequence is right-padded to a multiple of ``k`` with copies of the
    last frame, so T' = ceil(T / k) and D' = k * D.
    """
    if k < 1:
        raise ParameterError(f"stack factor must be >= 1, got {k}")
    t, d = f.frames.shape
    t_out = -(-t // k)
    padded = f.frames
    if t_out * k != t:
        tail = np.repeat(f.frames[-1:], t_out * k - t, axis=0)
        padded = np.concatenate([f.frames, tail], axis=0)
    stacked = padded.reshape(t_out, k * d)
    return FeatureSequence(stacked, frame_shift_ms=f.frame_shift_ms * k)


def unstack_frames(f: FeatureSequence, k: int = 3) -> FeatureSequence:
    """Inverse of :func:`stack_frames` up to the padding it appended."""
    t, d = f.frames.shape
    if d % k:
        raise ParameterError(f"dim {d} not divisible by stack factor {k}")
    return FeatureSequence(f.frames.reshape(t * k, d // k),
                           frame_shift_ms=f.frame_shift_ms / k)


def spec_augment(f: FeatureSequence, policy: SpecAugmentPolicy,
                 rng: np.random.Generator) -> FeatureSequence:
    """Mask random time and frequency bands; unmasked cells are untouched.

    Training-time only: evaluation pipelines must not call this (the data
    pipeline asserts its mode before applying).
    """
    out = f.frames.copy()
    t, d = out.shape
    fill = np.float32(out.mean()) if policy.fill_mode == "mean" else np.float32(0.0)
    for _ in range(policy.num_freq_masks):
        width = int(rng.integers(0, policy.max_freq_width + 1))
        width = min(width, d)
        start = int(rng.integers(0, d - width + 1))
        out[:, start:start + width] = fill
    for _ in range(policy.num_time_masks):
        width = int(rng.integers(0, policy.max_time_width + 1))
        width = min(width, t)
        start = int(rng.integers(0, t - width + 1))
        out[start:start + width, :] = fill
    return FeatureSequence(out, frame_shift_ms=f.frame_shift_ms)


# ---------------------------------------------------------------------------
# Feature file format: magic "FEAT", version u32, T u32, D u32,
# then T*D little-endian float32 row-major.
# ---------------------------------------------------------------------------


def save_features(path, f: FeatureSequence) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    t, d = f.frames.shape
    with open(path, "wb") as fh:
        fh.write(FEATURE_MAGIC)
        fh.write(struct.pack("<III", FEATURE_VERSION, t, d))
        fh.write(np.ascontiguousarray(f.frames, dtype="<f4").tobytes())


def load_features(path) -> FeatureSequence:
    data = Path(path).read_bytes()
    if data[:4] != FEATURE_MAGIC:
        raise DataFormatError(f"{path}: bad magic {data[:4]!r}, expected {FEATURE_MAGIC!r}")
    version, t, d = struct.unpack_from("<III", data, 4)
    if version != FEATURE_VERSION:
        raise DataFormatError(f"{path}: unsupported feature file version {version}")
    expected = 16 + 4 * t * d
    if len(data) != expected:
        raise DataFormatError(f"{path}: size {len(data)} != expected {expected}")
    frames = np.frombuffer(data, dtype="<f4", count=t * d, offset=16).reshape(t, d)
    return FeatureSequence(frames.copy())

"""Run configuration: sectioned key = value files with environment overrides.

Resolution order (later wins): scale-preset defaults, config file, process
environment. Environment variables use the form TPASR_<SECTION>_<KEY>, e.g.
TPASR_LAS_EPOCHS=20; TPASR_WORKDIR shortcuts [run] workdir.
"""

from __future__ import annotations

import configparser
import os
from pathlib import Path
from typing import Dict, Optional

from .errors import ConfigurationError

ENV_PREFIX = "TPASR_"

# Desk scale is the default: it trains end to end on a laptop. The paper
# scale mirrors the production dimensions; it type-checks and benchmarks but
# is not expected to train in this environment.
_DESK = {
    "run": {"seed": "0", "workdir": "work", "scale": "desk", "workers": "1"},
    "data": {
        "num_train": "2000", "num_valid": "200", "num_test": "200",
        "num_words": "30", "feature_dim": "80",
        "min_word_frames": "4", "max_word_frames": "8",
        "noise_sigma": "0.4", "min_words": "3", "max_words": "5",
    },
    "frontend": {
        "stack_frames": "3", "apply_specaugment": "false",
        "specaug_freq_masks": "1", "specaug_freq_width": "10",
        "specaug_time_masks": "1", "specaug_time_width": "8",
        # fixed affine applied to features at load time (a constant, not
        # per-utterance statistics): centers the synthetic templates
        "input_offset": "-0.5", "input_scale": "1.0",
    },
    "tokenizer": {"vocab_size": "50", "seed_cap": "2000"},
    "first_pass": {
        "num_layers": "3", "hidden_dim": "64", "epochs": "12",
        "batch_size": "16", "lr": "2e-3",
    },
    "las": {
        "model_dim": "64", "ff_dim": "256", "num_blocks": "2", "num_heads": "4",
        "lstm_hidden": "64", "conv_kernel": "7", "vgg_channels": "8,16",
        "epochs": "10", "batch_size": "16", "lr": "2e-3",
        "label_smoothing": "0.1", "scheduled_sampling": "0.3", "dropout": "0.1",
        "decoder_blocks": "2",
    },
    "decode": {
        "beam_size": "10", "nbest": "100", "beam_width": "200",
        "prune_log_prob": "-12.0", "include_eos": "true",
    },
    "fusion": {"lm_order": "3", "smoothing_k": "0.1"},
    "bench": {"num_runs": "50", "warmup": "5", "frames": "50"},
}

_PAPER_OVERRIDES = {
    "tokenizer": {"vocab_size": "5000"},
    "first_pass": {"num_layers": "12", "hidden_dim": "700"},
    "las": {
        "model_dim": "512", "ff_dim": "2048", "num_blocks": "10",
        "lstm_hidden": "512", "vgg_channels": "64,128",
    },
    "bench": {"frames": "500"},
}


class RunConfig:
    """Typed view over a configparser with preset defaults."""

    def __init__(self, parser: configparser.ConfigParser):
        self._cp = parser
        self.validate()

    # -- construction ----------------------------------------------------

    @classmethod
    def from_sources(cls, path: Optional[str] = None,
                     overrides: Optional[Dict[str, str]] = None,
                     env: Optional[Dict[str, str]] = None) -> "RunConfig":
        file_cp = configparser.ConfigParser()
        if path is not None:
            if not Path(path).exists():
                raise ConfigurationError(f"config file not found: {path}")
            file_cp.read(path)
        scale = file_cp.get("run", "scale", fallback="desk")
        env = os.environ if env is None else env
        scale = env.get(ENV_PREFIX + "RUN_SCALE", scale)

        cp = configparser.ConfigParser()
        cp.read_dict(_DESK)
        if scale == "paper":
            cp.read_dict(_PAPER_OVERRIDES)
            cp.set("run", "scale", "paper")
        elif scale != "desk":
            raise ConfigurationError(f"unknown scale preset {scale!r} (desk|paper)")
        cp.read_dict({s: dict(file_cp.items(s)) for s in file_cp.sections()})
        for key, value in env.items():
            if not key.startswith(ENV_PREFIX):
                continue
            if key == ENV_PREFIX + "WORKDIR":
                cp.set("run", "workdir", value)
                continue
            rest = key[len(ENV_PREFIX):].lower()
            section, _, option = rest.partition("_")
            if cp.has_section(section) and option:
                cp.set(section, option, value)
        if overrides:
            for dotted, value in overrides.items():
                section, _, option = dotted.partition(".")
                if not option:
                    raise ConfigurationError(f"override must be section.key=value: {dotted}")
                if not cp.has_section(section):
                    raise ConfigurationError(f"unknown config section {section!r}")
                cp.set(section, option, value)
        return cls(cp)

    def validate(self) -> None:
        for section in _DESK:
            if not self._cp.has_section(section):
                raise ConfigurationError(f"missing config section [{section}]")
        if self.get("run", "scale") not in ("desk", "paper"):
            raise ConfigurationError(f"unknown scale {self.get('run', 'scale')!r}")
        if self.getint("data", "min_words") > self.getint("data", "max_words"):
            raise ConfigurationError("data.min_words exceeds data.max_words")
        if self.getint("tokenizer", "vocab_size") < 8:
            raise ConfigurationError("tokenizer.vocab_size must be at least 8")

    # -- accessors ---------------------------------------------------------

    def get(self, section: str, key: str) -> str:
        try:
            return self._cp.get(section, key)
        except (configparser.NoSectionError, configparser.NoOptionError) as exc:
            raise ConfigurationError(str(exc)) from None

    def getint(self, section: str, key: str) -> int:
        return int(self.get(section, key))

    def getfloat(self, section: str, key: str) -> float:
        return float(self.get(section, key))

    def getbool(self, section: str, key: str) -> bool:
        value = self.get(section, key).lower()
        if value in ("1", "true", "yes", "on"):
            return True
        if value in ("0", "false", "no", "off"):
            return False
        raise ConfigurationError(f"[{section}] {key}: not a boolean: {value!r}")

    def get_int_pair(self, section: str, key: str):
        parts = [p.strip() for p in self.get(section, key).split(",")]
        if len(parts) != 2:
            raise ConfigurationError(f"[{section}] {key}: expected two integers")
        return int(parts[0]), int(parts[1])

    @property
    def workdir(self) -> Path:
        return Path(self.get("run", "workdir"))

    @property
    def seed(self) -> int:
        return self.getint("run", "seed")

    def dump(self) -> str:
        lines = []
        for section in self._cp.sections():
            lines.append(f"[{section}]")
            for key, value in self._cp.items(section):
                lines.append(f"{key} = {value}")
            lines.append("")
        return "\n".join(lines)

"""Two-pass speech recognition toolkit: streaming CTC first pass, LAS encoder
variants for standalone decoding, and n-best rescoring with score fusion."""

__version__ = "0.1.0"

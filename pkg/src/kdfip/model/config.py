"""Recognizer dimensions."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class ModelConfig:
    blocks: int = 2
    hidden: int = 64
    bottleneck: int = 8
    vocab_size: int = 20
    feature_dim: int = 16

    def __post_init__(self):
        for name in ("blocks", "hidden", "bottleneck", "vocab_size", "feature_dim"):
            if getattr(self, name) < 1:
                raise ValueError(f"model.{name}: must be >= 1")
        if self.bottleneck >= self.hidden:
            raise ValueError("model.bottleneck: must be smaller than hidden width")

    @property
    def n_classes(self) -> int:
        """Characters plus the blank."""
        return self.vocab_size + 1

    @property
    def blank_index(self) -> int:
        return self.vocab_size

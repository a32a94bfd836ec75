"""Symbol inventory with per-character acoustic prototypes."""

from __future__ import annotations

import string
from dataclasses import dataclass

import numpy as np

from ..rng import stream

_SYMBOLS = string.ascii_lowercase + string.ascii_uppercase + string.digits


@dataclass(frozen=True)
class VocabSpec:
    """V characters plus a distinguished blank; one unit-norm prototype each.

    The blank has no prototype: silence frames carry only speaker bias and
    observation noise. Label index V is the blank.
    """

    characters: tuple[str, ...]
    prototypes: np.ndarray  # (V, D) unit rows

    @property
    def size(self) -> int:
        return len(self.characters)

    @property
    def blank_index(self) -> int:
        return len(self.characters)

    @property
    def feature_dim(self) -> int:
        return self.prototypes.shape[1]

    def index_of(self, char: str) -> int:
        try:
            return self.characters.index(char)
        except ValueError:
            raise KeyError(f"unknown symbol {char!r}") from None


def build_vocab(seed: int, size: int, feature_dim: int) -> VocabSpec:
    if size < 2:
        raise ValueError(f"vocab size must be >= 2, got {size}")
    if feature_dim < 2:
        raise ValueError(f"feature dim must be >= 2, got {feature_dim}")
    if size > len(_SYMBOLS):
        raise ValueError(f"vocab size above {len(_SYMBOLS)} is not supported")
    g = stream(seed, "vocab")
    raw = g.standard_normal((size, feature_dim))
    protos = raw / np.linalg.norm(raw, axis=1, keepdims=True)
    for i in range(size):
        for j in range(i + 1, size):
            if np.linalg.norm(protos[i] - protos[j]) < 1e-9:
                raise ValueError("degenerate prototypes; change the seed")
    return VocabSpec(characters=tuple(_SYMBOLS[:size]), prototypes=protos)

"""Deterministic batch index streams.

Shuffles derive from (seed, tag, epoch) only, so two methods that train on
the same data under the same seed see identical batch order regardless of
which method they are; the reduction identities rely on this.
"""

from __future__ import annotations

import numpy as np

from ..rng import stream


def epoch_batches(
    n: int, batch_size: int, seed: int, tag: str, epoch: int
) -> list[np.ndarray]:
    perm = stream(seed, "shuffle", tag, epoch).permutation(n)
    return [perm[i : i + batch_size] for i in range(0, n, batch_size)]


class CyclingBatcher:
    """Endless batch stream over a dataset, reshuffled each pass."""

    def __init__(self, n: int, batch_size: int, seed: int, tag: str):
        self.n = n
        self.batch_size = batch_size
        self.seed = seed
        self.tag = tag
        self._pass = 0
        self._queue: list[np.ndarray] = []

    def next(self) -> np.ndarray:
        if not self._queue:
            self._queue = epoch_batches(
                self.n, self.batch_size, self.seed, self.tag, self._pass
            )
            self._pass += 1
        return self._queue.pop(0)

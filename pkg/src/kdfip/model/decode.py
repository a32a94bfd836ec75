"""Greedy collapse decoding."""

from __future__ import annotations

import numpy as np

from ..simdata import collapse_frame_labels


def greedy_decode(log_probs: np.ndarray, blank_index: int, characters) -> str:
    """Per-frame argmax (ties to the lowest index), merge repeats, drop blanks."""
    if log_probs.ndim != 2 or log_probs.shape[0] < 1:
        raise ValueError(f"expected (T, C) log-probs with T >= 1, got {log_probs.shape}")
    frame_idx = np.argmax(log_probs, axis=1)
    return collapse_frame_labels(frame_idx, blank_index, characters)

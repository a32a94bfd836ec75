"""Utterance-level gating by personality similarity.

One sigmoid score per utterance, shared by every block: how target-like the
utterance's mean-frame embedding is relative to the adaptation-set centroid.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from ..simdata import Utterance, utterance_embedding


@dataclass
class GatingParams:
    centroid: np.ndarray  # target adaptation-set mean embedding, (D,)
    tau: float  # cosine threshold mapped to score 0.5
    sharpness: float  # > 0

    def __post_init__(self):
        if self.sharpness <= 0:
            raise ValueError(f"gate sharpness must be > 0, got {self.sharpness}")


def _cosine(a: np.ndarray, b: np.ndarray) -> float:
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        warnings.warn("zero-norm embedding: cosine defined as 0", stacklevel=3)
        return 0.0
    return float(a @ b) / (na * nb)


def gating_score(gate: GatingParams, u: Utterance) -> float:
    """sigmoid((cos(e(u), centroid) - tau) / sharpness), strictly in (0, 1)."""
    cos = _cosine(utterance_embedding(u), gate.centroid)
    return 1.0 / (1.0 + math.exp(-(cos - gate.tau) / gate.sharpness))


def calibrate_gate(
    target_embeddings: list[np.ndarray], nontarget_embeddings: list[np.ndarray]
) -> GatingParams:
    """Threshold at the midpoint of the two mean cosines; sharpness a quarter
    of the gap (floored). Deterministic in its inputs."""
    if not target_embeddings:
        raise ValueError("calibrate_gate: target embedding set is empty")
    if not nontarget_embeddings:
        raise ValueError("calibrate_gate: non-target embedding set is empty")
    centroid = np.mean(np.stack(target_embeddings), axis=0)
    t_cos = float(np.mean([_cosine(e, centroid) for e in target_embeddings]))
    n_cos = float(np.mean([_cosine(e, centroid) for e in nontarget_embeddings]))
    gap = t_cos - n_cos
    if gap == 0.0:
        warnings.warn("gate calibration found no cosine gap; using default sharpness")
        return GatingParams(centroid=centroid, tau=t_cos, sharpness=0.05)
    return GatingParams(
        centroid=centroid,
        tau=(t_cos + n_cos) / 2.0,
        sharpness=max(0.01, abs(gap) / 4.0),
    )

"""Speaker voice characteristics as a linear warp plus bias on feature space."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..rng import stream


@dataclass(frozen=True)
class SpeakerProfile:
    speaker_id: str
    warp: np.ndarray  # (D, D), I + strength * R
    bias: np.ndarray  # (D,)
    strength: float


def sample_speaker_profile(
    seed: int, speaker_id: str, strength: float, feature_dim: int
) -> SpeakerProfile:
    """Deterministic profile from (seed, speaker_id); strength 0 is the identity."""
    if strength < 0:
        raise ValueError(f"warp strength must be >= 0, got {strength}")
    d = feature_dim
    g = stream(seed, "speaker", speaker_id)
    r = g.standard_normal((d, d)) / np.sqrt(d)
    warp = np.eye(d) + strength * r
    bias = strength * g.standard_normal(d) / np.sqrt(d)
    dist = np.linalg.norm(warp - np.eye(d))
    if dist > strength * np.sqrt(d) * 1.5:
        raise ValueError(f"warp for {speaker_id!r} unexpectedly far from identity")
    return SpeakerProfile(speaker_id=speaker_id, warp=warp, bias=bias, strength=strength)

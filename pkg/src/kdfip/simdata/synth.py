"""Utterance rendering: frame features aligned with labels, plus the
corruption model for synthesized speech (content hallucination and
spectral mismatch)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..rng import stream
from .speakers import SpeakerProfile
from .vocab import VocabSpec


@dataclass(frozen=True)
class CorruptionSpec:
    """Synthesis defects: ``p_sub`` renders a character from a wrong prototype
    while keeping its label (hallucinated content); ``eta`` jitters the
    speaker warp per utterance (spectral mismatch)."""

    p_sub: float = 0.10
    eta: float = 0.10

    def __post_init__(self):
        if not 0.0 <= self.p_sub <= 1.0:
            raise ValueError(f"p_sub must be in [0, 1], got {self.p_sub}")
        if self.eta < 0.0:
            raise ValueError(f"eta must be >= 0, got {self.eta}")


@dataclass
class Utterance:
    features: np.ndarray  # (T, D)
    frame_labels: np.ndarray  # (T,) int64; blank frames carry the blank index
    transcript: str
    speaker_id: str
    origin: str  # generic | personal | synthetic

    @property
    def num_frames(self) -> int:
        return self.features.shape[0]


def collapse_frame_labels(labels, blank_index: int, characters) -> str:
    """Greedy collapse: merge consecutive repeats, then drop blanks."""
    out = []
    prev = None
    for lab in labels:
        lab = int(lab)
        if lab != prev and lab != blank_index:
            out.append(characters[lab])
        prev = lab
    return "".join(out)


def _render(
    vocab: VocabSpec,
    profile: SpeakerProfile,
    transcript: str,
    sigma_obs: float,
    rng_seed: int,
    corruption: CorruptionSpec | None,
    origin: str,
) -> Utterance:
    if not transcript:
        raise ValueError("transcript must be non-empty")
    char_idx = [vocab.index_of(c) for c in transcript]

    content = stream(rng_seed, "content")
    warp = profile.warp
    render_idx = list(char_idx)
    if corruption is not None:
        corrupt = stream(rng_seed, "corruption")
        if corruption.eta > 0.0:
            d = vocab.feature_dim
            jitter = corrupt.standard_normal((d, d)) / np.sqrt(d)
            warp = warp @ (np.eye(d) + corruption.eta * jitter)
        for pos, true_idx in enumerate(char_idx):
            if corrupt.random() < corruption.p_sub:
                wrong = int(corrupt.integers(0, vocab.size - 1))
                if wrong >= true_idx:
                    wrong += 1
                render_idx[pos] = wrong

    labels: list[int] = []
    bases: list[np.ndarray] = []
    blank_base = profile.bias
    for pos, true_idx in enumerate(char_idx):
        if pos > 0:
            # a blank must separate equal adjacent characters or collapse merges them
            if transcript[pos] == transcript[pos - 1]:
                gap = int(content.integers(1, 3))
            else:
                gap = int(content.integers(0, 3))
            for _ in range(gap):
                labels.append(vocab.blank_index)
                bases.append(blank_base)
        duration = int(content.integers(2, 5))
        char_base = warp @ vocab.prototypes[render_idx[pos]] + profile.bias
        for _ in range(duration):
            labels.append(true_idx)
            bases.append(char_base)

    base = np.stack(bases)
    noise = content.standard_normal(base.shape)
    features = base + sigma_obs * noise
    return Utterance(
        features=features,
        frame_labels=np.asarray(labels, dtype=np.int64),
        transcript=transcript,
        speaker_id=profile.speaker_id,
        origin=origin,
    )


def synth_utterance(
    vocab: VocabSpec,
    profile: SpeakerProfile,
    transcript: str,
    sigma_obs: float,
    rng_seed: int,
    origin: str = "generic",
) -> Utterance:
    """Clean rendering: each character spans 2-4 frames of its warped prototype,
    separated by 0-2 blank frames of bias-centered noise."""
    return _render(vocab, profile, transcript, sigma_obs, rng_seed, None, origin)


def corrupt_synthetic(
    vocab: VocabSpec,
    profile: SpeakerProfile,
    transcript: str,
    sigma_obs: float,
    rng_seed: int,
    spec: CorruptionSpec,
    origin: str = "synthetic",
) -> Utterance:
    """Corrupted rendering; labels and transcript always keep the intended
    characters. Content draws use the same stream as clean synthesis, so
    p_sub=0, eta=0 reproduces it bit for bit."""
    return _render(vocab, profile, transcript, sigma_obs, rng_seed, spec, origin)


def utterance_embedding(u: Utterance) -> np.ndarray:
    """Mean feature frame; the personality summary used by gating."""
    if u.num_frames < 1:
        raise ValueError("utterance has no frames")
    return u.features.mean(axis=0)

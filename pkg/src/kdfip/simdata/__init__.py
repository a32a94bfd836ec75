"""Parametric simulator for generic, real-personal, and synthetic-personal
speech-like corpora with controllable synthesis defects."""

from .corpus import ROLES, Corpus, build_text_pool, gen_corpus
from .speakers import SpeakerProfile, sample_speaker_profile
from .store import CorpusFormatError, load_corpus, save_corpus
from .synth import (
    CorruptionSpec,
    Utterance,
    collapse_frame_labels,
    corrupt_synthetic,
    synth_utterance,
    utterance_embedding,
)
from .vocab import VocabSpec, build_vocab

__all__ = [
    "ROLES",
    "Corpus",
    "CorpusFormatError",
    "CorruptionSpec",
    "SpeakerProfile",
    "Utterance",
    "VocabSpec",
    "build_text_pool",
    "build_vocab",
    "collapse_frame_labels",
    "corrupt_synthetic",
    "gen_corpus",
    "load_corpus",
    "sample_speaker_profile",
    "save_corpus",
    "synth_utterance",
    "utterance_embedding",
]

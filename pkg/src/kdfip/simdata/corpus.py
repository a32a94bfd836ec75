"""Corpus assembly: transcript pool plus per-utterance seeded rendering.

Per-utterance seeds derive from (master seed, corpus tag, index), so corpus
content is independent of generation order or worker count.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..ioutil import canonical_hash
from ..rng import derive_seed, stream
from .speakers import SpeakerProfile
from .synth import CorruptionSpec, Utterance, _render
from .vocab import VocabSpec

ROLES = ("generic", "personal", "synthetic")


@dataclass
class Corpus:
    utterances: list[Utterance]
    role: str
    split: str
    config_hash: str

    def __len__(self) -> int:
        return len(self.utterances)


def build_text_pool(
    master_seed: int, vocab: VocabSpec, size: int, min_len: int, max_len: int
) -> list[str]:
    """Fixed pool of sentences all corpora draw transcripts from."""
    if size < 1:
        raise ValueError("text pool size must be >= 1")
    if not 1 <= min_len <= max_len:
        raise ValueError(f"bad transcript length range [{min_len}, {max_len}]")
    g = stream(master_seed, "textpool")
    pool = []
    for _ in range(size):
        length = int(g.integers(min_len, max_len + 1))
        chars = g.integers(0, vocab.size, size=length)
        pool.append("".join(vocab.characters[int(c)] for c in chars))
    return pool


def corpus_config_hash(
    *,
    role: str,
    split: str,
    size: int,
    vocab: VocabSpec,
    profiles: list[SpeakerProfile],
    sigma_obs: float,
    text_pool: list[str],
    master_seed: int,
    corruption: CorruptionSpec | None,
    tag: str,
) -> str:
    """Hash of everything that determines a corpus's content; computable
    without rendering, so loaders can validate files against a config."""
    return canonical_hash(
        {
            "role": role,
            "split": split,
            "size": size,
            "tag": tag,
            "master_seed": master_seed,
            "sigma_obs": sigma_obs,
            "vocab_size": vocab.size,
            "feature_dim": vocab.feature_dim,
            "speakers": [(p.speaker_id, p.strength) for p in profiles],
            "text_pool_size": len(text_pool),
            "corruption": None
            if corruption is None
            else {"p_sub": corruption.p_sub, "eta": corruption.eta},
        }
    )


def gen_corpus(
    *,
    role: str,
    split: str,
    size: int,
    vocab: VocabSpec,
    profiles: list[SpeakerProfile],
    sigma_obs: float,
    text_pool: list[str],
    master_seed: int,
    corruption: CorruptionSpec | None = None,
    tag: str | None = None,
) -> Corpus:
    if role not in ROLES:
        raise ValueError(f"role must be one of {ROLES}, got {role!r}")
    if size < 1:
        raise ValueError(f"{role} corpus must contain at least 1 utterance, got {size}")
    if not profiles:
        raise ValueError("at least one speaker profile is required")
    if role == "synthetic" and corruption is None:
        raise ValueError("synthetic role requires a CorruptionSpec")
    if role != "synthetic" and corruption is not None:
        raise ValueError(f"{role} corpora are rendered clean; drop the CorruptionSpec")
    tag = tag or f"{role}-{split}"

    content_hash = corpus_config_hash(
        role=role,
        split=split,
        size=size,
        vocab=vocab,
        profiles=profiles,
        sigma_obs=sigma_obs,
        text_pool=text_pool,
        master_seed=master_seed,
        corruption=corruption,
        tag=tag,
    )

    utterances = []
    for i in range(size):
        utt_seed = derive_seed(master_seed, "utt", tag, i)
        pick = stream(utt_seed, "pick")
        transcript = text_pool[int(pick.integers(0, len(text_pool)))]
        profile = profiles[i % len(profiles)]
        utterances.append(
            _render(vocab, profile, transcript, sigma_obs, utt_seed, corruption, role)
        )
    return Corpus(
        utterances=utterances,
        role=role,
        split=split,
        config_hash=canonical_hash(gen_config),
    )

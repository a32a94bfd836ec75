"""Character error rate over greedy decodes."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..model import ModelBundle, forward_frames, gating_score, greedy_decode, make_batch
from ..simdata import Corpus, VocabSpec


def edit_distance(ref, hyp) -> int:
    """Levenshtein distance with unit costs."""
    n, m = len(ref), len(hyp)
    if n == 0:
        return m
    if m == 0:
        return n
    prev = list(range(m + 1))
    for i in range(1, n + 1):
        cur = [i] + [0] * m
        for j in range(1, m + 1):
            sub = prev[j - 1] + (ref[i - 1] != hyp[j - 1])
            cur[j] = min(prev[j] + 1, cur[j - 1] + 1, sub)
        prev = cur
    return prev[m]


def cer(distances, ref_lengths) -> float:
    """Corpus-level micro-average: total distance over total reference length."""
    total_len = sum(ref_lengths)
    if total_len <= 0:
        raise ValueError("cer: total reference length must be positive")
    return sum(distances) / total_len


@dataclass
class EvalResult:
    corpus_role: str
    utterance_count: int
    cer: float
    edit_distances: list[int] = field(default_factory=list)
    decode_samples: list[tuple[str, str]] = field(default_factory=list)


_EVAL_CHUNK = 32  # utterances per forward pass; aggregation is order-independent


def evaluate(
    bundle: ModelBundle, corpus: Corpus, vocab: VocabSpec, gated: bool = False
) -> EvalResult:
    """Greedy-decode every utterance and micro-average the edit distances."""
    if not corpus.utterances:
        raise ValueError("evaluate: corpus is empty")
    cfg = bundle.config
    if vocab.size != cfg.vocab_size or vocab.feature_dim != cfg.feature_dim:
        raise ValueError(
            f"evaluate: vocab (V={vocab.size}, D={vocab.feature_dim}) does not match "
            f"model (V={cfg.vocab_size}, D={cfg.feature_dim})"
        )
    if gated and bundle.adapters is not None and bundle.gate is None:
        raise ValueError("evaluate: gated evaluation requires a calibrated gate")

    distances: list[int] = []
    ref_lengths: list[int] = []
    samples: list[tuple[str, str]] = []
    utts = corpus.utterances
    for start in range(0, len(utts), _EVAL_CHUNK):
        chunk = utts[start : start + _EVAL_CHUNK]
        batch = make_batch(chunk, cfg)
        gate_values = None
        if gated and bundle.adapters is not None:
            gate_values = np.asarray([gating_score(bundle.gate, u) for u in chunk])
        lp = forward_frames(
            bundle.backbone,
            batch,
            cfg,
            adapters=bundle.adapters,
            gate_values=gate_values,
        ).data
        for u, (s, e) in zip(chunk, batch.utt_slices):
            hyp = greedy_decode(lp[s:e], cfg.blank_index, vocab.characters)
            distances.append(edit_distance(u.transcript, hyp))
            ref_lengths.append(len(u.transcript))
            if len(samples) < 5:
                samples.append((u.transcript, hyp))
    return EvalResult(
        corpus_role=corpus.role,
        utterance_count=len(utts),
        cer=cer(distances, ref_lengths),
        edit_distances=distances,
        decode_samples=samples,
    )

"""Corpus file format.

One file per corpus:

    header line   JSON: format tag, config hash, role, split, count,
                  vocab {characters, feature_dim}
    per utterance JSON metadata line (speaker_id, origin, transcript,
                  frame_labels, frames, dim), then frames*dim little-endian
                  64-bit floats (row-major), then one newline

Round-trips are bit-exact.
"""

from __future__ import annotations

import io
import json
from pathlib import Path

import numpy as np

from ..ioutil import atomic_write_bytes
from .corpus import Corpus
from .synth import Utterance
from .vocab import VocabSpec

FORMAT_TAG = "kdfip-corpus-v1"


class CorpusFormatError(ValueError):
    pass


def save_corpus(corpus: Corpus, vocab: VocabSpec, path: str | Path) -> None:
    buf = io.BytesIO()
    header = {
        "format": FORMAT_TAG,
        "config_hash": corpus.config_hash,
        "role": corpus.role,
        "split": corpus.split,
        "count": len(corpus.utterances),
        "vocab": {"characters": list(vocab.characters), "feature_dim": vocab.feature_dim},
    }
    buf.write(json.dumps(header, sort_keys=True).encode("utf-8"))
    buf.write(b"\n")
    for u in corpus.utterances:
        meta = {
            "speaker_id": u.speaker_id,
            "origin": u.origin,
            "transcript": u.transcript,
            "frame_labels": [int(x) for x in u.frame_labels],
            "frames": int(u.features.shape[0]),
            "dim": int(u.features.shape[1]),
        }
        buf.write(json.dumps(meta, sort_keys=True).encode("utf-8"))
        buf.write(b"\n")
        buf.write(np.ascontiguousarray(u.features, dtype="<f8").tobytes())
        buf.write(b"\n")
    atomic_write_bytes(path, buf.getvalue())


def load_corpus(path: str | Path) -> tuple[Corpus, dict]:
    """Returns the corpus and its header dict (vocab metadata included)."""
    with open(path, "rb") as fh:
        header_line = fh.readline()
        try:
            header = json.loads(header_line)
        except json.JSONDecodeError as exc:
            raise CorpusFormatError(f"{path}: bad header line ({exc})") from None
        if header.get("format") != FORMAT_TAG:
            raise CorpusFormatError(f"{path}: not a {FORMAT_TAG} file")
        utterances = []
        for i in range(header["count"]):
            meta_line = fh.readline()
            if not meta_line:
                raise CorpusFormatError(f"{path}: truncated at utterance {i}")
            meta = json.loads(meta_line)
            nbytes = meta["frames"] * meta["dim"] * 8
            payload = fh.read(nbytes)
            if len(payload) != nbytes:
                raise CorpusFormatError(
                    f"{path}: payload size mismatch at utterance {i}"
                )
            if fh.read(1) != b"\n":
                raise CorpusFormatError(f"{path}: missing separator at utterance {i}")
            features = np.frombuffer(payload, dtype="<f8").reshape(
                meta["frames"], meta["dim"]
            ).astype(np.float64)
            utterances.append(
                Utterance(
                    features=features,
                    frame_labels=np.asarray(meta["frame_labels"], dtype=np.int64),
                    transcript=meta["transcript"],
                    speaker_id=meta["speaker_id"],
                    origin=meta["origin"],
                )
            )
        if fh.read(1):
            raise CorpusFormatError(f"{path}: trailing bytes after last utterance")
    corpus = Corpus(
        utterances=utterances,
        role=header["role"],
        split=header["split"],
        config_hash=header["config_hash"],
    )
    return corpus, header

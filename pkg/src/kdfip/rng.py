"""Deterministic hierarchical random streams.

Every random draw in the package comes from a named sub-stream derived as

    key = first 128 bits of SHA-256("<master_seed>/<part>/<part>/...")
    generator = Philox4x64-10 keyed with `key` (NumPy ``Philox`` bit generator)

so any sub-stream can be reproduced in isolation and corpus content is
independent of generation order or worker count. The derivation constants
(SHA-256, Philox4x64-10, NumPy Generator distribution algorithms) are pinned
here and in the README for cross-language reproducibility.
"""

from __future__ import annotations

import hashlib

import numpy as np


def stream(master_seed: int, *path: object) -> np.random.Generator:
    """Return the named sub-stream for ``path`` under ``master_seed``."""
    label = "/".join([str(int(master_seed))] + [str(p) for p in path])
    digest = hashlib.sha256(label.encode("utf-8")).digest()
    key = np.frombuffer(digest[:16], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def derive_seed(master_seed: int, *path: object) -> int:
    """Stable 63-bit integer seed for the named sub-stream."""
    label = "/".join([str(int(master_seed))] + [str(p) for p in path])
    digest = hashlib.sha256(label.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little") & 0x7FFFFFFFFFFFFFFF

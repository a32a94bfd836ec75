"""Checkpoint files: magic, JSON manifest, contiguous float64 payload.

Layout:

    bytes 0..6   magic b"KDFIP1\\n"
    8 bytes      little-endian uint64, manifest length in bytes
    manifest     UTF-8 JSON: stage, config_hash, step,
                 tensors [{name, shape, offset}] (offsets into the payload)
    payload      concatenated little-endian float64 arrays, row-major

Save then load is bitwise identical.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .ioutil import atomic_write_bytes
from .model import GatingParams, ModelBundle, ModelConfig

MAGIC = b"KDFIP1\n"


class CheckpointError(ValueError):
    pass


def save_checkpoint(
    path: str | Path,
    params: dict[str, np.ndarray],
    *,
    stage: str,
    config_hash: str,
    step: int,
) -> None:
    tensors = []
    chunks = []
    offset = 0
    for name in sorted(params):
        arr = np.ascontiguousarray(params[name], dtype="<f8")
        tensors.append({"name": name, "shape": list(arr.shape), "offset": offset})
        raw = arr.tobytes()
        chunks.append(raw)
        offset += len(raw)
    manifest = json.dumps(
        {
            "stage": stage,
            "config_hash": config_hash,
            "step": step,
            "payload_bytes": offset,
            "tensors": tensors,
        },
        sort_keys=True,
    ).encode("utf-8")
    blob = MAGIC + struct.pack("<Q", len(manifest)) + manifest + b"".join(chunks)
    atomic_write_bytes(path, blob)


def load_checkpoint(path: str | Path) -> tuple[dict[str, np.ndarray], dict]:
    raw = Path(path).read_bytes()
    if raw[: len(MAGIC)] != MAGIC:
        raise CheckpointError(f"{path}: bad magic (not a checkpoint file)")
    pos = len(MAGIC)
    if len(raw) < pos + 8:
        raise CheckpointError(f"{path}: truncated manifest header")
    (manifest_len,) = struct.unpack("<Q", raw[pos : pos + 8])
    pos += 8
    try:
        manifest = json.loads(raw[pos : pos + manifest_len])
    except json.JSONDecodeError as exc:
        raise CheckpointError(f"{path}: bad manifest ({exc})") from None
    pos += manifest_len
    payload = raw[pos:]
    if len(payload) != manifest["payload_bytes"]:
        raise CheckpointError(
            f"{path}: payload size mismatch "
            f"(expected {manifest['payload_bytes']}, got {len(payload)})"
        )
    params: dict[str, np.ndarray] = {}
    for entry in manifest["tensors"]:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        start = entry["offset"]
        end = start + count * 8
        if end > len(payload):
            raise CheckpointError(f"{path}: payload size too small for {entry['name']!r}")
        arr = np.frombuffer(payload[start:end], dtype="<f8").astype(np.float64)
        params[entry["name"]] = arr.reshape(shape)
    return params, manifest


def check_shapes(params: dict[str, np.ndarray], template: dict[str, np.ndarray], what: str) -> None:
    """Reject checkpoints whose tensors do not match the requesting model."""
    missing = sorted(set(template) - set(params))
    if missing:
        raise CheckpointError(f"{what}: missing tensor {missing[0]!r}")
    for name, ref in template.items():
        if params[name].shape != ref.shape:
            raise CheckpointError(
                f"{what}: shape mismatch for {name!r} "
                f"(checkpoint {params[name].shape}, model {ref.shape})"
            )


def bundle_to_flat(bundle: ModelBundle) -> dict[str, np.ndarray]:
    flat = {f"backbone.{k}": v for k, v in bundle.backbone.items()}
    if bundle.adapters is not None:
        flat.update({f"adapter.{k}": v for k, v in bundle.adapters.items()})
    if bundle.gate is not None:
        flat["gate.centroid"] = bundle.gate.centroid
        flat["gate.tau"] = np.asarray(bundle.gate.tau)
        flat["gate.sharpness"] = np.asarray(bundle.gate.sharpness)
    return flat


def flat_to_bundle(flat: dict[str, np.ndarray], cfg: ModelConfig, stage: str) -> ModelBundle:
    backbone = {k[len("backbone."):]: v for k, v in flat.items() if k.startswith("backbone.")}
    adapters = {k[len("adapter."):]: v for k, v in flat.items() if k.startswith("adapter.")}
    gate = None
    if "gate.centroid" in flat:
        gate = GatingParams(
            centroid=flat["gate.centroid"],
            tau=float(flat["gate.tau"]),
            sharpness=float(flat["gate.sharpness"]),
        )
    if not backbone:
        raise CheckpointError("checkpoint holds no backbone tensors")
    return ModelBundle(
        config=cfg,
        backbone=backbone,
        adapters=adapters or None,
        gate=gate,
        stage=stage,
    )


def save_bundle(path: str | Path, bundle: ModelBundle, *, config_hash: str, step: int) -> None:
    save_checkpoint(
        path, bundle_to_flat(bundle), stage=bundle.stage, config_hash=config_hash, step=step
    )


def load_bundle(path: str | Path, cfg: ModelConfig) -> tuple[ModelBundle, dict]:
    flat, manifest = load_checkpoint(path)
    bundle = flat_to_bundle(flat, cfg, manifest.get("stage", "unknown"))
    return bundle, manifest

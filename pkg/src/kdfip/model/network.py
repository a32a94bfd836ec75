"""Forward passes of the recognizer.

Each block consumes a stacked (t-1, t, t+1) context of its input with edge
frames repeated, projects it, applies tanh and an affine layer norm. An
adapter, when present, adds its bottleneck output to the block hidden state,
scaled by the utterance's gate value (1 in ungated mode). The head maps the
final hidden state to per-frame log-probabilities.

Utterances are packed into a flat frame matrix; context indices are clamped
within each utterance, so batched and single-utterance passes agree.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from ..engine import Tensor, ops
from ..engine.tensor import ShapeError
from ..simdata import Utterance
from .config import ModelConfig

ArrayOrTensor = Mapping[str, object]


@dataclass
class Batch:
    features: np.ndarray  # (N, D) frames of all utterances, concatenated
    labels: np.ndarray  # (N,) int64
    prev_idx: np.ndarray  # (N,) context index t-1, clamped per utterance
    next_idx: np.ndarray  # (N,) context index t+1, clamped per utterance
    utt_slices: list[tuple[int, int]]

    @property
    def n_frames(self) -> int:
        return self.features.shape[0]


def make_batch(utterances: list[Utterance], cfg: ModelConfig) -> Batch:
    if not utterances:
        raise ValueError("batch needs at least one utterance")
    feats = []
    labels = []
    prev_idx = []
    next_idx = []
    slices = []
    offset = 0
    for u in utterances:
        t = u.num_frames
        if u.features.shape[1] != cfg.feature_dim:
            raise ShapeError(
                f"utterance feature dim {u.features.shape[1]} "
                f"!= model feature dim {cfg.feature_dim}"
            )
        feats.append(u.features)
        labels.append(u.frame_labels)
        idx = np.arange(t)
        prev_idx.append(offset + np.maximum(idx - 1, 0))
        next_idx.append(offset + np.minimum(idx + 1, t - 1))
        slices.append((offset, offset + t))
        offset += t
    return Batch(
        features=np.ascontiguousarray(np.concatenate(feats, axis=0)),
        labels=np.concatenate(labels),
        prev_idx=np.concatenate(prev_idx),
        next_idx=np.concatenate(next_idx),
        utt_slices=slices,
    )


def _bias_row(ones_col: Tensor, row) -> Tensor:
    # (N,1) @ (1,K) expands a stored row vector without broadcasting
    return ops.matmul(ones_col, row)


def forward_frames(
    backbone: ArrayOrTensor,
    batch: Batch,
    cfg: ModelConfig,
    adapters: ArrayOrTensor | None = None,
    gate_values: np.ndarray | None = None,
) -> Tensor:
    """Per-frame log-probabilities, (N, vocab+1).

    ``gate_values`` holds one scalar per utterance (requires adapters); None
    runs ungated fusion, identical to a gate fixed at 1.
    """
    n = batch.n_frames
    ones_col = Tensor(np.ones((n, 1)))
    gate_mat = None
    if gate_values is not None:
        if adapters is None:
            raise ValueError("gate_values given but no adapters present")
        if len(gate_values) != len(batch.utt_slices):
            raise ShapeError(
                f"{len(gate_values)} gate values for {len(batch.utt_slices)} utterances"
            )
        per_frame = np.empty(n)
        for g, (start, end) in zip(gate_values, batch.utt_slices):
            per_frame[start:end] = g
        gate_mat = Tensor(np.ascontiguousarray(np.broadcast_to(per_frame[:, None], (n, cfg.hidden))))

    x = Tensor.of(batch.features)
    for b in range(cfg.blocks):
        xm = ops.row_gather(x, batch.prev_idx)
        xp = ops.row_gather(x, batch.next_idx)
        stacked = ops.concat([xm, x, xp], axis=1)
        z = ops.add(ops.matmul(stacked, backbone[f"blk{b}.w"]), _bias_row(ones_col, backbone[f"blk{b}.b"]))
        a = ops.tanh(z)
        y = ops.layer_norm(a)
        h = ops.add(
            ops.mul(y, _bias_row(ones_col, backbone[f"blk{b}.ln_gain"])),
            _bias_row(ones_col, backbone[f"blk{b}.ln_bias"]),
        )
        if adapters is not None:
            down = ops.add(
                ops.matmul(h, adapters[f"blk{b}.down_w"]),
                _bias_row(ones_col, adapters[f"blk{b}.down_b"]),
            )
            up = ops.add(
                ops.matmul(ops.tanh(down), adapters[f"blk{b}.up_w"]),
                _bias_row(ones_col, adapters[f"blk{b}.up_b"]),
            )
            h = ops.add(h, up if gate_mat is None else ops.mul(up, gate_mat))
        x = h
    logits = ops.add(ops.matmul(x, backbone["head.w"]), _bias_row(ones_col, backbone["head.b"]))
    return ops.log_softmax(logits)


def backbone_forward(backbone: ArrayOrTensor, u: Utterance, cfg: ModelConfig) -> np.ndarray:
    """Log-probabilities (T, vocab+1) of the bare backbone on one utterance."""
    batch = make_batch([u], cfg)
    return forward_frames(backbone, batch, cfg).data


def adapter_forward(block_hidden: np.ndarray, adapters: ArrayOrTensor, block: int) -> np.ndarray:
    """Bottleneck output for one block's hidden state (zero at fresh init)."""
    h = Tensor.of(block_hidden)
    n = h.data.shape[0]
    ones_col = Tensor(np.ones((n, 1)))
    down = ops.add(
        ops.matmul(h, adapters[f"blk{block}.down_w"]),
        _bias_row(ones_col, adapters[f"blk{block}.down_b"]),
    )
    return ops.add(
        ops.matmul(ops.tanh(down), adapters[f"blk{block}.up_w"]),
        _bias_row(ones_col, adapters[f"blk{block}.up_b"]),
    ).data


def fused_forward(
    backbone: ArrayOrTensor,
    adapters: ArrayOrTensor,
    gate_value: float | None,
    u: Utterance,
    cfg: ModelConfig,
) -> np.ndarray:
    """Log-probabilities of the adapter-fused model on one utterance.

    ``gate_value`` None runs ungated fusion (fixed 1); otherwise it must lie
    in [0, 1].
    """
    if gate_value is not None and not 0.0 <= gate_value <= 1.0:
        raise ValueError(f"gate value must be in [0, 1], got {gate_value}")
    batch = make_batch([u], cfg)
    gv = None if gate_value is None else np.asarray([float(gate_value)])
    return forward_frames(backbone, batch, cfg, adapters=adapters, gate_values=gv).data

"""Frame-level losses, composed from engine primitives so they are
differentiable on the tape.

The KL reference term is computed with the same primitive sequence as the
student cross term; when teacher and student outputs coincide bitwise the
divergence is exactly zero, which the warm-start contract relies on.
"""

from __future__ import annotations

import numpy as np

from ..engine import Tensor, ops
from ..engine.tensor import ShapeError


def _onehot(labels: np.ndarray, n_classes: int) -> np.ndarray:
    out = np.zeros((labels.shape[0], n_classes))
    out[np.arange(labels.shape[0]), labels] = 1.0
    return out


def ce_frame_loss(log_probs, frame_labels) -> Tensor:
    """Mean over frames of the negative log-probability of the true label."""
    lp = Tensor.of(log_probs)
    if lp.ndim != 2:
        raise ShapeError(f"ce_frame_loss: expected (T, C) log-probs, got {lp.shape}")
    t, c = lp.shape
    labels = np.asarray(frame_labels, dtype=np.int64)
    if labels.shape != (t,):
        raise ShapeError(
            f"ce_frame_loss: {labels.shape[0] if labels.ndim else '?'} labels for {t} frames"
        )
    if labels.size and (labels.min() < 0 or labels.max() >= c):
        raise ValueError(
            f"ce_frame_loss: label out of range [0, {c - 1}] "
            f"(min {labels.min()}, max {labels.max()})"
        )
    picked = ops.mul(lp, Tensor(_onehot(labels, c)))
    per_frame = ops.scale(ops.mean_axis(picked, 1), float(c))
    return ops.scale(ops.mean_axis(per_frame, 0), -1.0)


def _mean_weighted_sum(weights: np.ndarray, log_probs) -> Tensor:
    """mean over rows of sum_c weights[t,c] * log_probs[t,c], via primitives."""
    c = weights.shape[1]
    prod = ops.mul(Tensor(weights), log_probs)
    return ops.mean_axis(ops.scale(ops.mean_axis(prod, 1), float(c)), 0)


def kl_frame_loss(teacher_log_probs, student_log_probs) -> Tensor:
    """Mean over frames of KL(teacher || student); no gradient enters the teacher."""
    t_lp = teacher_log_probs.data if isinstance(teacher_log_probs, Tensor) else np.asarray(teacher_log_probs)
    s_lp = Tensor.of(student_log_probs)
    if t_lp.shape != s_lp.shape:
        raise ShapeError(
            f"kl_frame_loss: teacher shape {t_lp.shape} != student shape {s_lp.shape}"
        )
    if t_lp.ndim != 2:
        raise ShapeError(f"kl_frame_loss: expected (T, C) log-probs, got {t_lp.shape}")
    p_t = np.exp(t_lp)
    # identical primitive sequence on both sides: teacher==student gives exactly 0
    ref = _mean_weighted_sum(p_t, Tensor(t_lp))
    cross = _mean_weighted_sum(p_t, s_lp)
    return ops.add(ref, ops.scale(cross, -1.0))


def hybrid_loss(ce: Tensor, kl: Tensor | None, beta: float):
    """total = CE + beta * KL; returns (total tensor, float breakdown)."""
    if beta < 0:
        raise ValueError(f"beta must be >= 0, got {beta}")
    ce_val = float(ce.data)
    if kl is None:
        return ce, {"ce": ce_val, "kl": 0.0, "total": ce_val}
    kl_val = float(kl.data)
    total = ops.add(ce, ops.scale(kl, beta))
    return total, {"ce": ce_val, "kl": kl_val, "total": ce_val + beta * kl_val}

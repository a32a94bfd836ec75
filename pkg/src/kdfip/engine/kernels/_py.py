"""NumPy reference implementations of the hot numeric kernels.

Always available; the compiled core in ``_fast.pyx`` implements the same
interface. Both operate on C-contiguous float64 arrays and never mutate
their inputs.
"""

from __future__ import annotations

import numpy as np


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b


def matmul_nt(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """a @ b.T"""
    return a @ b.T


def matmul_tn(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """a.T @ b"""
    return a.T @ b


def add(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a + b


def mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a * b


def scale(a: np.ndarray, c: float) -> np.ndarray:
    return a * c


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def relu_bwd(g: np.ndarray, y: np.ndarray) -> np.ndarray:
    return g * (y > 0.0)


def tanh(x: np.ndarray) -> np.ndarray:
    return np.tanh(x)


def tanh_bwd(g: np.ndarray, y: np.ndarray) -> np.ndarray:
    return g * (1.0 - y * y)


def layernorm(x: np.ndarray, eps: float) -> tuple[np.ndarray, np.ndarray]:
    """Row-wise normalization; returns (y, inv_std) with inv_std kept for backward."""
    mean = x.mean(axis=1, keepdims=True)
    centered = x - mean
    var = np.mean(centered * centered, axis=1, keepdims=True)
    inv_std = 1.0 / np.sqrt(var + eps)
    return centered * inv_std, inv_std[:, 0].copy()


def layernorm_bwd(g: np.ndarray, y: np.ndarray, inv_std: np.ndarray) -> np.ndarray:
    g_mean = g.mean(axis=1, keepdims=True)
    gy_mean = np.mean(g * y, axis=1, keepdims=True)
    return inv_std[:, None] * (g - g_mean - y * gy_mean)


def softmax(x: np.ndarray) -> np.ndarray:
    shifted = x - x.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def softmax_bwd(g: np.ndarray, p: np.ndarray) -> np.ndarray:
    dot = np.sum(g * p, axis=1, keepdims=True)
    return p * (g - dot)


def logsoftmax(x: np.ndarray) -> np.ndarray:
    shifted = x - x.max(axis=1, keepdims=True)
    lse = np.log(np.sum(np.exp(shifted), axis=1, keepdims=True))
    return shifted - lse


def logsoftmax_bwd(g: np.ndarray, lp: np.ndarray) -> np.ndarray:
    gsum = g.sum(axis=1, keepdims=True)
    return g - np.exp(lp) * gsum


def row_gather(x: np.ndarray, idx: np.ndarray) -> np.ndarray:
    return x[idx]


def row_gather_bwd(g: np.ndarray, idx: np.ndarray, n_rows: int) -> np.ndarray:
    out = np.zeros((n_rows, g.shape[1]), dtype=np.float64)
    np.add.at(out, idx, g)
    return out

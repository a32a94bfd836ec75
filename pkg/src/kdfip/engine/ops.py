"""The primitive set of the tensor engine.

Exactly these primitives exist: matmul, add, elementwise multiply, relu,
tanh, row-wise layer normalization, softmax, log-softmax, row-gather,
mean-over-axis, concat-along-axis, scalar-scale. Shapes must conform
exactly (no implicit broadcasting); every output is checked finite.
"""

from __future__ import annotations

import numpy as np

from . import kernels
from .tensor import EngineError, ShapeError, Tensor, active_tape

K = kernels.active

LAYERNORM_EPS = 1e-5


def _apply(op: str, out_data: np.ndarray, operands: tuple, backward, replay) -> Tensor:
    if not np.all(np.isfinite(out_data)):
        raise EngineError(f"{op}: non-finite values in output")
    tape = active_tape()
    if tape is not None and any(
        t.node is not None and t.node.tape is tape for t in operands
    ):
        node = tape.record(op, out_data, operands, backward, replay)
        return Tensor(out_data, node)
    return Tensor(out_data)


def matmul(a, b) -> Tensor:
    a, b = Tensor.of(a), Tensor.of(b)
    A, B = a.data, b.data
    if A.ndim != 2 or B.ndim != 2 or A.shape[1] != B.shape[0]:
        raise ShapeError(f"matmul: incompatible shapes {A.shape} and {B.shape}")
    out = K.matmul(A, B)
    return _apply(
        "matmul",
        out,
        (a, b),
        backward=lambda g: (K.matmul_nt(g, B), K.matmul_tn(A, g)),
        replay=lambda: K.matmul(A, B),
    )


def add(a, b) -> Tensor:
    a, b = Tensor.of(a), Tensor.of(b)
    if a.data.shape != b.data.shape:
        raise ShapeError(f"add: shapes differ {a.data.shape} vs {b.data.shape}")
    A, B = a.data, b.data
    out = K.add(A, B)
    return _apply(
        "add", out, (a, b), backward=lambda g: (g, g), replay=lambda: K.add(A, B)
    )


def mul(a, b) -> Tensor:
    a, b = Tensor.of(a), Tensor.of(b)
    if a.data.shape != b.data.shape:
        raise ShapeError(f"mul: shapes differ {a.data.shape} vs {b.data.shape}")
    A, B = a.data, b.data
    out = K.mul(A, B)
    return _apply(
        "mul",
        out,
        (a, b),
        backward=lambda g: (K.mul(g, B), K.mul(g, A)),
        replay=lambda: K.mul(A, B),
    )


def scale(a, c: float) -> Tensor:
    a = Tensor.of(a)
    c = float(c)
    if not np.isfinite(c):
        raise EngineError(f"scale: factor must be finite, got {c}")
    A = a.data
    out = K.scale(A, c)
    return _apply(
        "scale",
        out,
        (a,),
        backward=lambda g: (K.scale(g, c),),
        replay=lambda: K.scale(A, c),
    )


def relu(a) -> Tensor:
    a = Tensor.of(a)
    A = a.data
    out = K.relu(A)
    return _apply(
        "relu",
        out,
        (a,),
        backward=lambda g: (K.relu_bwd(g, out),),
        replay=lambda: K.relu(A),
    )


def tanh(a) -> Tensor:
    a = Tensor.of(a)
    A = a.data
    out = K.tanh(A)
    return _apply(
        "tanh",
        out,
        (a,),
        backward=lambda g: (K.tanh_bwd(g, out),),
        replay=lambda: K.tanh(A),
    )


def _rows_view(op: str, A: np.ndarray) -> np.ndarray:
    if A.ndim == 1:
        return A.reshape(1, -1)
    if A.ndim == 2:
        return A
    raise ShapeError(f"{op}: expected 1D or 2D input, got shape {A.shape}")


def layer_norm(a) -> Tensor:
    """Row-wise normalization to zero mean, unit variance (epsilon-guarded)."""
    a = Tensor.of(a)
    A = a.data
    A2 = _rows_view("layer_norm", A)
    y2, inv_std = K.layernorm(A2, LAYERNORM_EPS)

    def bwd(g):
        g2 = np.ascontiguousarray(g.reshape(A2.shape))
        return (K.layernorm_bwd(g2, y2, inv_std).reshape(A.shape),)

    return _apply(
        "layer_norm",
        y2.reshape(A.shape),
        (a,),
        backward=bwd,
        replay=lambda: K.layernorm(A2, LAYERNORM_EPS)[0].reshape(A.shape),
    )


def softmax(a) -> Tensor:
    a = Tensor.of(a)
    A = a.data
    A2 = _rows_view("softmax", A)
    p2 = K.softmax(A2)

    def bwd(g):
        g2 = np.ascontiguousarray(g.reshape(A2.shape))
        return (K.softmax_bwd(g2, p2).reshape(A.shape),)

    return _apply(
        "softmax",
        p2.reshape(A.shape),
        (a,),
        backward=bwd,
        replay=lambda: K.softmax(A2).reshape(A.shape),
    )


def log_softmax(a) -> Tensor:
    a = Tensor.of(a)
    A = a.data
    A2 = _rows_view("log_softmax", A)
    lp2 = K.logsoftmax(A2)

    def bwd(g):
        g2 = np.ascontiguousarray(g.reshape(A2.shape))
        return (K.logsoftmax_bwd(g2, lp2).reshape(A.shape),)

    return _apply(
        "log_softmax",
        lp2.reshape(A.shape),
        (a,),
        backward=bwd,
        replay=lambda: K.logsoftmax(A2).reshape(A.shape),
    )


def row_gather(a, indices) -> Tensor:
    a = Tensor.of(a)
    A = a.data
    if A.ndim != 2:
        raise ShapeError(f"row_gather: expected 2D input, got shape {A.shape}")
    idx = np.ascontiguousarray(np.asarray(indices, dtype=np.int64))
    if idx.ndim != 1:
        raise ShapeError(f"row_gather: indices must be 1D, got shape {idx.shape}")
    if idx.size and (idx.min() < 0 or idx.max() >= A.shape[0]):
        raise ShapeError(
            f"row_gather: index out of range for {A.shape[0]} rows "
            f"(min {idx.min()}, max {idx.max()})"
        )
    out = K.row_gather(A, idx)
    return _apply(
        "row_gather",
        out,
        (a,),
        backward=lambda g: (K.row_gather_bwd(np.ascontiguousarray(g), idx, A.shape[0]),),
        replay=lambda: K.row_gather(A, idx),
    )


def mean_axis(a, axis: int) -> Tensor:
    a = Tensor.of(a)
    A = a.data
    if A.ndim < 1:
        raise ShapeError("mean_axis: input must have at least one axis")
    if not 0 <= axis < A.ndim:
        raise ShapeError(f"mean_axis: axis {axis} invalid for shape {A.shape}")
    n = A.shape[axis]
    # note: mean() returns a fresh contiguous array; asarray keeps 0-d results 0-d
    out = np.asarray(A.mean(axis=axis), dtype=np.float64)

    def bwd(g):
        expanded = np.broadcast_to(np.expand_dims(np.asarray(g), axis), A.shape)
        return (np.ascontiguousarray(expanded) * (1.0 / n),)

    return _apply(
        "mean_axis",
        out,
        (a,),
        backward=bwd,
        replay=lambda: np.asarray(A.mean(axis=axis), dtype=np.float64),
    )


def concat(parts, axis: int) -> Tensor:
    tensors = [Tensor.of(p) for p in parts]
    if not tensors:
        raise ShapeError("concat: needs at least one input")
    ndim = tensors[0].data.ndim
    if not 0 <= axis < ndim:
        raise ShapeError(f"concat: axis {axis} invalid for {ndim}D inputs")
    for t in tensors[1:]:
        if t.data.ndim != ndim:
            raise ShapeError("concat: inputs must share rank")
        for d in range(ndim):
            if d != axis and t.data.shape[d] != tensors[0].data.shape[d]:
                raise ShapeError(
                    f"concat: off-axis shapes differ "
                    f"{tensors[0].data.shape} vs {t.data.shape}"
                )
    arrays = [t.data for t in tensors]
    out = np.concatenate(arrays, axis=axis)
    sizes = [arr.shape[axis] for arr in arrays]

    def bwd(g):
        outs = []
        start = 0
        for s in sizes:
            sl = [slice(None)] * g.ndim
            sl[axis] = slice(start, start + s)
            outs.append(np.ascontiguousarray(g[tuple(sl)]))
            start += s
        return tuple(outs)

    return _apply(
        "concat",
        out,
        tuple(tensors),
        backward=bwd,
        replay=lambda: np.concatenate(arrays, axis=axis),
    )

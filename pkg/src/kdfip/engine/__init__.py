"""Minimal dense-tensor engine with reverse-mode gradients and diagnostics."""

from . import ops
from .diagnostics import (
    DiagnosticsReport,
    finite_diff_gradcheck,
    metric_inner_product,
    output_perturbation_residual,
)
from .kernels import BACKEND
from .tensor import EngineError, ShapeError, Tape, Tensor

__all__ = [
    "BACKEND",
    "DiagnosticsReport",
    "EngineError",
    "ShapeError",
    "Tape",
    "Tensor",
    "finite_diff_gradcheck",
    "metric_inner_product",
    "output_perturbation_residual",
    "ops",
]

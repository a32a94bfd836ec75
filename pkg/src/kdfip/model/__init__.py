"""Toy recognizer: context-stacking backbone, bottleneck adapters, gated fusion."""

from .config import ModelConfig
from .decode import greedy_decode
from .gating import GatingParams, calibrate_gate, gating_score
from .network import (
    Batch,
    adapter_forward,
    backbone_forward,
    forward_frames,
    fused_forward,
    make_batch,
)
from .params import (
    ModelBundle,
    ParamDict,
    copy_params,
    init_adapters,
    init_backbone,
    params_digest,
)

__all__ = [
    "Batch",
    "GatingParams",
    "ModelBundle",
    "ModelConfig",
    "ParamDict",
    "adapter_forward",
    "backbone_forward",
    "calibrate_gate",
    "copy_params",
    "forward_frames",
    "fused_forward",
    "gating_score",
    "greedy_decode",
    "init_adapters",
    "init_backbone",
    "make_batch",
    "params_digest",
]

"""Parameter containers and initializers.

Parameters are flat dicts of named float64 arrays. Backbone block ``b``
consumes a three-frame context of its input (width ``in_b``): projection
(3*in_b, H) plus bias, then layer-norm affine. Adapters are bottleneck
pairs per block with the up projection zero-initialized, so a fresh adapter
computes exactly zero.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..rng import stream
from .config import ModelConfig
from .gating import GatingParams

ParamDict = dict[str, np.ndarray]


def block_input_dim(cfg: ModelConfig, block: int) -> int:
    return cfg.feature_dim if block == 0 else cfg.hidden


def init_backbone(cfg: ModelConfig, seed: int) -> ParamDict:
    g = stream(seed, "init", "backbone")
    params: ParamDict = {}
    for b in range(cfg.blocks):
        fan_in = 3 * block_input_dim(cfg, b)
        params[f"blk{b}.w"] = g.standard_normal((fan_in, cfg.hidden)) / np.sqrt(fan_in)
        params[f"blk{b}.b"] = np.zeros((1, cfg.hidden))
        params[f"blk{b}.ln_gain"] = np.ones((1, cfg.hidden))
        params[f"blk{b}.ln_bias"] = np.zeros((1, cfg.hidden))
    # small head keeps the initial output near uniform
    params["head.w"] = 0.02 * g.standard_normal((cfg.hidden, cfg.n_classes))
    params["head.b"] = np.zeros((1, cfg.n_classes))
    return params


def init_adapters(cfg: ModelConfig, seed: int) -> ParamDict:
    g = stream(seed, "init", "adapter")
    params: ParamDict = {}
    for b in range(cfg.blocks):
        params[f"blk{b}.down_w"] = g.standard_normal(
            (cfg.hidden, cfg.bottleneck)
        ) / np.sqrt(cfg.hidden)
        params[f"blk{b}.down_b"] = np.zeros((1, cfg.bottleneck))
        params[f"blk{b}.up_w"] = np.zeros((cfg.bottleneck, cfg.hidden))
        params[f"blk{b}.up_b"] = np.zeros((1, cfg.hidden))
    return params


def copy_params(params: ParamDict) -> ParamDict:
    return {k: v.copy() for k, v in params.items()}


def params_digest(params: ParamDict) -> str:
    """Order-independent fingerprint of exact parameter bytes."""
    import hashlib

    h = hashlib.sha256()
    for name in sorted(params):
        h.update(name.encode())
        h.update(np.ascontiguousarray(params[name], dtype="<f8").tobytes())
    return h.hexdigest()


@dataclass
class ModelBundle:
    """A runnable model: backbone, optional adapters, optional gate."""

    config: ModelConfig
    backbone: ParamDict
    adapters: ParamDict | None = None
    gate: GatingParams | None = None
    stage: str = "init"
    extra: dict = field(default_factory=dict)

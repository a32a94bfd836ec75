"""Comparison methods: full fine-tuning, multi-source adapter training,
gated backbone retraining, and single-module invariant-path training."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..config import StageConfig
from ..model import (
    GatingParams,
    ModelConfig,
    copy_params,
    forward_frames,
    gating_score,
    params_digest,
)
from ..model.params import ParamDict
from .stages import _utts, run_training, train_adapter_ce

METHODS = ("FT", "Adapter", "PGA", "FIP", "KDFIP")


@dataclass(frozen=True)
class MethodSpec:
    name: str
    use_personal: bool = True
    use_synthetic: bool = False
    use_generic: bool = False

    def __post_init__(self):
        if self.name not in METHODS:
            raise ValueError(f"unknown method {self.name!r}; expected one of {METHODS}")
        if self.name in ("FT", "Adapter"):
            if not self.use_personal or self.use_generic:
                raise ValueError(
                    f"{self.name} trains on personal(+synthetic) data only; "
                    "flags do not match"
                )
        elif self.name in ("PGA", "FIP"):
            if not self.use_personal or not self.use_generic:
                raise ValueError(
                    f"{self.name} requires personal data and generic data; flags do not match"
                )
        elif self.name == "KDFIP":
            if not (self.use_personal and self.use_synthetic and self.use_generic):
                raise ValueError("KDFIP uses all three data sources; flags do not match")

    @property
    def label(self) -> str:
        return self.name.lower()


def train_baseline(
    spec: MethodSpec,
    model_cfg: ModelConfig,
    stage_cfg: StageConfig,
    *,
    backbone: ParamDict,
    personal=None,
    synthetic=None,
    generic=None,
    adapters: ParamDict | None = None,
    gate: GatingParams | None = None,
    adapter_init: ParamDict | None = None,
    capture=None,
):
    """Returns (trained params, report). FT/PGA/FIP train a backbone copy;
    Adapter trains adapters against the frozen backbone."""
    if spec.name == "KDFIP":
        raise ValueError("KDFIP is the staged pipeline; use the stage trainers")
    per = _utts(personal)
    syn = _utts(synthetic) if spec.use_synthetic else []
    gen = _utts(generic)
    if spec.use_personal and not per:
        raise ValueError(f"{spec.name}: personal corpus required by data flags")
    if spec.use_generic and not gen:
        raise ValueError(f"{spec.name}: generic corpus required by data flags")

    if spec.name == "Adapter":
        return train_adapter_ce(
            model_cfg,
            stage_cfg,
            backbone,
            per + syn,
            adapter_init=adapter_init,
            label=spec.label,
            capture=capture,
        )

    if spec.name == "FT":
        def forward(tracked, batch, idx):
            return forward_frames(tracked, batch, model_cfg)

        return run_training(
            label=spec.label,
            model_cfg=model_cfg,
            stage_cfg=stage_cfg,
            trainable=backbone,
            new_utts=per + syn,
            forward_new=forward,
            capture=capture,
        )

    if spec.name == "FIP":
        # whole-backbone hybrid training: CE on personal+synthetic, KL on
        # generic data against the frozen pretrained backbone
        teacher_backbone = copy_params(backbone)

        def forward(tracked, batch, idx):
            return forward_frames(tracked, batch, model_cfg)

        def teacher(batch, idx):
            return forward_frames(teacher_backbone, batch, model_cfg).data

        return run_training(
            label=spec.label,
            model_cfg=model_cfg,
            stage_cfg=stage_cfg,
            trainable=backbone,
            new_utts=per + syn,
            forward_new=forward,
            old_utts=gen,
            forward_old=forward,
            teacher_fn=teacher,
            capture=capture,
        )

    # PGA: backbone retrained with CE through the gated model
    if adapters is None or gate is None:
        raise ValueError("PGA requires trained adapters and a calibrated gate")
    data = gen + per + syn
    gate_values = np.asarray([gating_score(gate, u) for u in data])
    adapters_digest = params_digest(adapters)

    def forward_gated(tracked, batch, idx):
        return forward_frames(
            tracked, batch, model_cfg, adapters=adapters, gate_values=gate_values[idx]
        )

    params, report = run_training(
        label=spec.label,
        model_cfg=model_cfg,
        stage_cfg=stage_cfg,
        trainable=backbone,
        new_utts=data,
        forward_new=forward_gated,
        capture=capture,
    )
    if params_digest(adapters) != adapters_digest:
        raise AssertionError("pga: frozen adapters changed")
    return params, report

"""The staged adaptation pipeline.

Stage 1 pretrains the backbone on generic data. Stage 2 trains fresh
adapters on the small real-personal set (backbone frozen, ungated). Stage 3
continues the adapters on synthetic data while a KL term anchors their
outputs on real personal data to the frozen stage-2 teacher. Stage 4
fine-tunes a copy of the backbone on generic data through the gated model,
with a KL term on personal data against the ungated stage-3 teacher, so the
gate decides where personalization applies.
"""

from __future__ import annotations

import time
from typing import Callable, Mapping

import numpy as np

from ..config import StageConfig
from ..engine import Tape
from ..engine.tensor import EngineError
from ..model import (
    GatingParams,
    ModelConfig,
    copy_params,
    forward_frames,
    gating_score,
    init_adapters,
    init_backbone,
    make_batch,
    params_digest,
)
from ..model.params import ParamDict
from ..simdata import Corpus, Utterance
from .adam import AdamState, adam_step
from .batching import CyclingBatcher, epoch_batches
from .losses import ce_frame_loss, hybrid_loss, kl_frame_loss
from .report import StepRecord, TrainReport


class TrainingDiverged(RuntimeError):
    pass


def _utts(data) -> list[Utterance]:
    if data is None:
        return []
    if isinstance(data, Corpus):
        return data.utterances
    return list(data)


def run_training(
    *,
    label: str,
    model_cfg: ModelConfig,
    stage_cfg: StageConfig,
    trainable: ParamDict,
    new_utts: list[Utterance],
    forward_new: Callable,
    old_utts: list[Utterance] | None = None,
    forward_old: Callable | None = None,
    teacher_fn: Callable | None = None,
    capture: Callable | None = None,
) -> tuple[ParamDict, TrainReport]:
    """Generic hybrid-loss loop: one new-task CE batch per step, plus one
    old-task KL batch against a frozen teacher when beta > 0.

    Forward callables receive (tracked params, batch, index array into the
    corpus) and return per-frame log-probabilities.
    """
    beta = stage_cfg.beta
    report = TrainReport(stage=label, beta=beta)
    params = copy_params(trainable)
    opt_state = AdamState()
    use_kl = old_utts is not None and beta > 0
    if use_kl and (forward_old is None or teacher_fn is None):
        raise ValueError(f"{label}: KL term needs forward_old and teacher_fn")
    kl_batches = (
        CyclingBatcher(len(old_utts), stage_cfg.kl_batch_size, stage_cfg.seed, "old-task")
        if use_kl
        else None
    )
    step = 0
    t0 = time.perf_counter()
    for epoch in range(stage_cfg.epochs):
        for idx in epoch_batches(
            len(new_utts), stage_cfg.batch_size, stage_cfg.seed, "new-task", epoch
        ):
            batch = make_batch([new_utts[i] for i in idx], model_cfg)
            tape = Tape()
            try:
                with tape:
                    tracked = {k: tape.param(k, v) for k, v in params.items()}
                    lp = forward_new(tracked, batch, idx)
                    ce = ce_frame_loss(lp, batch.labels)
                    kl = None
                    if use_kl:
                        oidx = kl_batches.next()
                        obatch = make_batch([old_utts[i] for i in oidx], model_cfg)
                        t_lp = teacher_fn(obatch, oidx)
                        s_lp = forward_old(tracked, obatch, oidx)
                        kl = kl_frame_loss(t_lp, s_lp)
                    total, parts = hybrid_loss(ce, kl, beta)
                if not np.isfinite(parts["total"]):
                    raise TrainingDiverged(
                        f"{label}: non-finite loss at step {step} "
                        f"(ce={parts['ce']}, kl={parts['kl']})"
                    )
                grads = tape.backward(total)
            except EngineError as exc:
                raise TrainingDiverged(f"{label}: diverged at step {step}: {exc}") from exc
            params, opt_state = adam_step(params, grads, opt_state, stage_cfg.lr)
            report.append(
                StepRecord(step, label, parts["ce"], parts["kl"], parts["total"], stage_cfg.lr)
            )
            if capture is not None:
                capture(step, copy_params(params))
            step += 1
    report.wall_clock = time.perf_counter() - t0
    if report.steps:
        report.final_metrics["final_ce"] = report.steps[-1].loss_ce
        report.final_metrics["final_kl"] = report.steps[-1].loss_kl
        report.final_metrics["initial_kl"] = report.steps[0].loss_kl
    return params, report


def train_stage1(
    model_cfg: ModelConfig, stage_cfg: StageConfig, generic_train, capture=None
) -> tuple[ParamDict, TrainReport]:
    """Backbone pretraining: CE on generic data from a fresh initialization."""
    utts = _utts(generic_train)
    if not utts:
        raise ValueError("stage 1 requires a non-empty generic corpus")
    backbone = init_backbone(model_cfg, stage_cfg.seed)

    def forward(tracked, batch, idx):
        return forward_frames(tracked, batch, model_cfg)

    return run_training(
        label="stage1",
        model_cfg=model_cfg,
        stage_cfg=stage_cfg,
        trainable=backbone,
        new_utts=utts,
        forward_new=forward,
        capture=capture,
    )


def train_adapter_ce(
    model_cfg: ModelConfig,
    stage_cfg: StageConfig,
    backbone: ParamDict,
    train_utts: list[Utterance],
    adapter_init: ParamDict | None = None,
    label: str = "stage2",
    capture=None,
) -> tuple[ParamDict, TrainReport]:
    """Plain CE adapter training, ungated, backbone frozen.

    Stage 2 uses it with fresh zero-output adapters on personal data; the
    multi-source adapter baseline and reduction oracles reuse it.
    """
    if not train_utts:
        raise ValueError(f"{label}: training corpus is empty")
    before = params_digest(backbone)
    trainable = (
        copy_params(adapter_init)
        if adapter_init is not None
        else init_adapters(model_cfg, stage_cfg.seed)
    )

    def forward(tracked, batch, idx):
        return forward_frames(backbone, batch, model_cfg, adapters=tracked)

    adapters, report = run_training(
        label=label,
        model_cfg=model_cfg,
        stage_cfg=stage_cfg,
        trainable=trainable,
        new_utts=train_utts,
        forward_new=forward,
        capture=capture,
    )
    if params_digest(backbone) != before:
        raise AssertionError(f"{label}: frozen backbone changed")
    return adapters, report


def train_stage2(
    model_cfg: ModelConfig,
    stage_cfg: StageConfig,
    backbone: ParamDict,
    personal_train,
    capture=None,
) -> tuple[ParamDict, TrainReport]:
    """Real-personal adapter training from zero-output initialization."""
    return train_adapter_ce(
        model_cfg, stage_cfg, backbone, _utts(personal_train), label="stage2", capture=capture
    )


def train_stage3(
    model_cfg: ModelConfig,
    stage_cfg: StageConfig,
    backbone: ParamDict,
    adapters_star: ParamDict,
    synthetic_train,
    personal_train,
    capture=None,
) -> tuple[ParamDict, TrainReport]:
    """Synthetic adaptation under personalized invariance.

    CE on synthetic batches; KL on personal batches between the frozen
    stage-2 model (teacher) and the updating adapters, both ungated. The
    student starts at the teacher, so the first logged KL is exactly zero.
    """
    syn = _utts(synthetic_train)
    per = _utts(personal_train)
    if not syn:
        raise ValueError("stage 3 requires a non-empty synthetic corpus")
    if stage_cfg.beta > 0 and not per:
        raise ValueError("stage 3 requires personal data for the KL term")
    before = params_digest(backbone)

    def forward(tracked, batch, idx):
        return forward_frames(backbone, batch, model_cfg, adapters=tracked)

    def teacher(batch, idx):
        return forward_frames(backbone, batch, model_cfg, adapters=adapters_star).data

    adapters, report = run_training(
        label="stage3",
        model_cfg=model_cfg,
        stage_cfg=stage_cfg,
        trainable=adapters_star,
        new_utts=syn,
        forward_new=forward,
        old_utts=per,
        forward_old=forward,
        teacher_fn=teacher,
        capture=capture,
    )
    if params_digest(backbone) != before:
        raise AssertionError("stage3: frozen backbone changed")
    return adapters, report


def train_stage4(
    model_cfg: ModelConfig,
    stage_cfg: StageConfig,
    backbone_star: ParamDict,
    adapters_bar: ParamDict,
    gate: GatingParams | None,
    generic_train,
    personal_train,
    capture=None,
) -> tuple[ParamDict, TrainReport]:
    """Gated restoration of generalization.

    CE on generic data through the gated student; KL on personal data
    between the ungated stage-3 teacher and the gated student. Only the
    backbone copy moves. The teacher carries no gate, so the first KL is
    nonzero whenever the gate falls below 1 on personal data; it is recorded
    and flagged rather than corrected.
    """
    if gate is None:
        raise ValueError("stage 4 requires a calibrated gate; run gate calibration first")
    gen = _utts(generic_train)
    per = _utts(personal_train)
    if not gen:
        raise ValueError("stage 4 requires a non-empty generic corpus")
    adapters_digest = params_digest(adapters_bar)
    gate_new = np.asarray([gating_score(gate, u) for u in gen])
    gate_old = np.asarray([gating_score(gate, u) for u in per])

    def forward_new(tracked, batch, idx):
        return forward_frames(
            tracked, batch, model_cfg, adapters=adapters_bar, gate_values=gate_new[idx]
        )

    def forward_old(tracked, batch, idx):
        return forward_frames(
            tracked, batch, model_cfg, adapters=adapters_bar, gate_values=gate_old[idx]
        )

    def teacher(batch, idx):
        return forward_frames(backbone_star, batch, model_cfg, adapters=adapters_bar).data

    backbone_bar, report = run_training(
        label="stage4",
        model_cfg=model_cfg,
        stage_cfg=stage_cfg,
        trainable=backbone_star,
        new_utts=gen,
        forward_new=forward_new,
        old_utts=per,
        forward_old=forward_old,
        teacher_fn=teacher,
        capture=capture,
    )
    if params_digest(adapters_bar) != adapters_digest:
        raise AssertionError("stage4: frozen adapters changed")
    if report.steps and report.steps[0].loss_kl > 1e-12:
        report.warnings.append(
            f"initial KL {report.steps[0].loss_kl:.6g} nonzero: gated student vs ungated teacher"
        )
    return backbone_bar, report

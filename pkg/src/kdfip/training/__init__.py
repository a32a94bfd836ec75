"""Losses, optimizer, and the staged/baseline training engines."""

from .adam import AdamState, adam_step
from .baselines import METHODS, MethodSpec, train_baseline
from .losses import ce_frame_loss, hybrid_loss, kl_frame_loss
from .report import StepRecord, TrainReport
from .stages import (
    TrainingDiverged,
    run_training,
    train_adapter_ce,
    train_stage1,
    train_stage2,
    train_stage3,
    train_stage4,
)

__all__ = [
    "METHODS",
    "AdamState",
    "MethodSpec",
    "StepRecord",
    "TrainReport",
    "TrainingDiverged",
    "adam_step",
    "ce_frame_loss",
    "hybrid_loss",
    "kl_frame_loss",
    "run_training",
    "train_adapter_ce",
    "train_baseline",
    "train_stage1",
    "train_stage2",
    "train_stage3",
    "train_stage4",
]

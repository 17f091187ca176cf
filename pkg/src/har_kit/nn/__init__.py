"""Minimal dense/convolutional network engine with reverse-mode gradients."""

from har_kit.nn.layers import (
    Conv1d,
    Dense,
    Dropout,
    GlobalMaxPool,
    ReLU,
    TransposedConv1d,
    layer_from_spec,
)
from har_kit.nn.losses import bce_with_logits_loss, cross_entropy_loss
from har_kit.nn.model import Sequential
from har_kit.nn.optim import (
    Adam,
    AdamW,
    CosineSchedule,
    SGDMomentum,
    StepSchedule,
    make_optimizer,
    make_schedule,
    schedule_rate,
)
from har_kit.nn.gradcheck import grad_check
from har_kit.nn.checkpoint import CHECKPOINT_FORMAT, load_checkpoint, save_checkpoint

__all__ = [
    "Conv1d",
    "Dense",
    "Dropout",
    "GlobalMaxPool",
    "ReLU",
    "TransposedConv1d",
    "layer_from_spec",
    "Sequential",
    "Adam",
    "AdamW",
    "SGDMomentum",
    "StepSchedule",
    "CosineSchedule",
    "make_optimizer",
    "make_schedule",
    "schedule_rate",
    "cross_entropy_loss",
    "bce_with_logits_loss",
    "grad_check",
    "save_checkpoint",
    "load_checkpoint",
    "CHECKPOINT_FORMAT",
]

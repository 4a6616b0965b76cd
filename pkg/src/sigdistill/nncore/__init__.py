"""Minimal dense numeric stack for the student classifier.

All math is float64 numpy; gradients are exact reverse-mode, written by hand
for the fixed architecture and verified against central finite differences.
"""

from .model import (
    NUM_CLASSES,
    ArchConfig,
    Model,
    backward,
    embed,
    forward,
    init_model,
    param_count,
    predict,
)
from .loss import cross_entropy, softmax
from .optim import AdamWState, LrSchedulerState, adamw_step, init_adamw, scheduler_step
from .gradcheck import GradCheckReport, compare_gradients, finite_difference_grads, grad_check
from .checkpoint import load_checkpoint, save_checkpoint

__all__ = [
    "NUM_CLASSES",
    "ArchConfig",
    "Model",
    "AdamWState",
    "LrSchedulerState",
    "GradCheckReport",
    "init_model",
    "param_count",
    "forward",
    "backward",
    "predict",
    "embed",
    "cross_entropy",
    "softmax",
    "init_adamw",
    "adamw_step",
    "scheduler_step",
    "grad_check",
    "finite_difference_grads",
    "compare_gradients",
    "save_checkpoint",
    "load_checkpoint",
]

"""AdamW with decoupled weight decay, and halve-on-plateau LR scheduling."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ValidationError


@dataclass
class AdamWState:
    lr: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 0.01
    step: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)


def init_adamw(
    params: dict[str, np.ndarray],
    lr: float = 1e-4,
    weight_decay: float = 0.01,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> AdamWState:
    return AdamWState(
        lr=lr,
        beta1=beta1,
        beta2=beta2,
        eps=eps,
        weight_decay=weight_decay,
        m={k: np.zeros_like(v) for k, v in params.items()},
        v={k: np.zeros_like(v) for k, v in params.items()},
    )


def adamw_step(
    params: dict[str, np.ndarray], grads: dict[str, np.ndarray], state: AdamWState
) -> None:
    """One in-place update: bias-corrected moments, decay applied off the gradient path."""
    state.step += 1
    t = state.step
    bc1 = 1.0 - state.beta1**t
    bc2 = 1.0 - state.beta2**t
    for name, p in params.items():
        g = grads[name]
        if g.shape != p.shape:
            raise ValidationError(f"gradient shape mismatch for {name}")
        if not np.all(np.isfinite(g)):
            raise ValidationError(f"non-finite gradient for parameter {name!r}")
        m = state.m[name]
        v = state.v[name]
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * g * g
        p -= state.lr * ((m / bc1) / (np.sqrt(v / bc2) + state.eps) + state.weight_decay * p)


@dataclass
class LrSchedulerState:
    lr: float
    factor: float = 0.5
    patience: int = 2
    best: float = float("-inf")
    since_improvement: int = 0

    def __post_init__(self) -> None:
        if self.lr <= 0:
            raise ValidationError("lr must be positive")
        if not (0 < self.factor < 1):
            raise ValidationError("factor must be in (0, 1)")


def scheduler_step(state: LrSchedulerState, val_accuracy: float) -> LrSchedulerState:
    """Halve the rate after `patience` consecutive epochs without improvement."""
    if not (0.0 <= val_accuracy <= 1.0):
        raise ValidationError(f"val_accuracy must be in [0, 1], got {val_accuracy}")
    if val_accuracy > state.best:
        state.best = val_accuracy
        state.since_improvement = 0
    else:
        state.since_improvement += 1
        if state.since_improvement >= state.patience:
            state.lr *= state.factor
            state.since_improvement = 0
    return state

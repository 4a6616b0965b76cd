"""Label records and teacher configuration types."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ValidationError
from ..signalgen import N_CLASSES, SignalClass


@dataclass(frozen=True)
class LabelRecord:
    """One pseudo label. option_permutation is empty for non-VLM teachers."""

    sample_id: str
    label: SignalClass
    teacher: str
    option_permutation: tuple[int, ...] = ()
    raw_response: str | None = None
    correct: bool | None = None

    def __post_init__(self) -> None:
        if self.option_permutation and sorted(self.option_permutation) != list(range(N_CLASSES)):
            raise ValidationError(
                f"option_permutation must permute 0..{N_CLASSES - 1}: {self.option_permutation}"
            )


@dataclass(frozen=True)
class NoiseSpec:
    """Uniform label noise: keep the true label with probability correct_ratio."""

    correct_ratio: float
    mode: str = "uniform_excluding_truth"

    def __post_init__(self) -> None:
        if not (0.0 <= self.correct_ratio <= 1.0):
            raise ValidationError(f"correct_ratio must be in [0, 1], got {self.correct_ratio}")
        if self.mode != "uniform_excluding_truth":
            raise ValidationError(f"unknown noise mode {self.mode!r}")


class ConfusionModel:
    """Row-stochastic matrix: row i gives the label distribution for true class i."""

    def __init__(self, matrix) -> None:
        m = np.asarray(matrix, dtype=np.float64)
        if m.shape != (N_CLASSES, N_CLASSES):
            raise ValidationError(f"confusion matrix must be 10x10, got {m.shape}")
        if np.any(m < 0):
            raise ValidationError("confusion matrix entries must be nonnegative")
        rowsums = m.sum(axis=1)
        bad = np.abs(rowsums - 1.0) > 1e-9
        if np.any(bad):
            raise ValidationError(
                f"confusion matrix rows must sum to 1; row(s) {np.where(bad)[0].tolist()} do not"
            )
        self.matrix = m

    def diagonal_mass(self) -> float:
        """Mean of the diagonal = expected accuracy on a class-balanced set."""
        return float(np.diag(self.matrix).mean())


# Shipped stand-in for a strong-but-imperfect plot-reading annotator. Diagonal
# mass is exactly 0.8171; errors concentrate on cubic -> sigmoid with smaller
# leaks toward concave/convex/gaussian, and mild slips elsewhere.
_C = SignalClass
_DEFAULT_CONFUSION_ROWS: dict[SignalClass, dict[SignalClass, float]] = {
    _C.CONSTANT: {_C.CONSTANT: 0.999, _C.LINEAR_INCREASE: 0.001},
    _C.LINEAR_INCREASE: {_C.LINEAR_INCREASE: 0.945, _C.EXPONENTIAL_GROWTH: 0.035, _C.SIGMOID: 0.02},
    _C.LINEAR_DECREASE: {_C.LINEAR_DECREASE: 0.945, _C.EXPONENTIAL_DECAY: 0.035, _C.CONCAVE: 0.02},
    _C.CONCAVE: {_C.CONCAVE: 0.87, _C.GAUSSIAN: 0.07, _C.CONVEX: 0.03, _C.CUBIC_FUNCTION: 0.03},
    _C.CONVEX: {_C.CONVEX: 0.87, _C.EXPONENTIAL_GROWTH: 0.06, _C.GAUSSIAN: 0.04, _C.CUBIC_FUNCTION: 0.03},
    _C.EXPONENTIAL_GROWTH: {_C.EXPONENTIAL_GROWTH: 0.85, _C.CONVEX: 0.09, _C.LINEAR_INCREASE: 0.06},
    _C.EXPONENTIAL_DECAY: {_C.EXPONENTIAL_DECAY: 0.85, _C.CONCAVE: 0.09, _C.LINEAR_DECREASE: 0.06},
    _C.SIGMOID: {_C.SIGMOID: 0.75, _C.LINEAR_INCREASE: 0.12, _C.CUBIC_FUNCTION: 0.08, _C.CONSTANT: 0.05},
    _C.CUBIC_FUNCTION: {
        _C.CUBIC_FUNCTION: 0.10,
        _C.SIGMOID: 0.55,
        _C.GAUSSIAN: 0.15,
        _C.CONCAVE: 0.09,
        _C.CONVEX: 0.09,
        _C.EXPONENTIAL_GROWTH: 0.02,
    },
    _C.GAUSSIAN: {_C.GAUSSIAN: 0.992, _C.CONCAVE: 0.008},
}


def default_confusion_model() -> ConfusionModel:
    m = np.zeros((N_CLASSES, N_CLASSES))
    for true_cls, row in _DEFAULT_CONFUSION_ROWS.items():
        for pred_cls, p in row.items():
            m[int(true_cls), int(pred_cls)] = p
    return ConfusionModel(m)


@dataclass(frozen=True)
class VlmEndpointConfig:
    """Where and how to reach a chat-completions style endpoint.

    api_key_env names the environment variable holding the key; the key
    itself is never stored or printed.
    """

    base_url: str
    model: str
    api_key_env: str = "SIGDISTILL_API_KEY"
    temperature: float = 0.0
    timeout: float = 60.0
    max_retries: int = 3
    max_concurrent: int = 1
    backoff: float = 0.5

    def __post_init__(self) -> None:
        if self.temperature < 0:
            raise ValidationError("temperature must be >= 0")
        if self.max_retries < 0:
            raise ValidationError("max_retries must be >= 0")
        if self.max_concurrent < 1:
            raise ValidationError("max_concurrent must be >= 1")

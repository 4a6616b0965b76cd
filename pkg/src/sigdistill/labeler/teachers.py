"""Local teachers: ground-truth oracle, noise models, systematic-error rule."""

from __future__ import annotations

import numpy as np

from ..errors import ValidationError
from ..signalgen import N_CLASSES, SignalClass, TimeSeries
from .records import ConfusionModel, LabelRecord, NoiseSpec

# Cubic signals whose middle root falls in this central band get labeled
# sigmoid by the systematic teacher: a coherent feature region, not random.
SYSTEMATIC_BAND = (0.4, 0.6)


def oracle_label(ts: TimeSeries) -> LabelRecord:
    return LabelRecord(sample_id=ts.id, label=ts.gt_class, teacher="oracle", correct=True)


def uniform_noise_label(ts: TimeSeries, spec: NoiseSpec, rng: np.random.Generator) -> LabelRecord:
    """Keep the truth with probability rho; otherwise uniform over the other 9."""
    if rng.random() < spec.correct_ratio:
        label = ts.gt_class
    else:
        k = int(rng.integers(0, N_CLASSES - 1))
        if k >= int(ts.gt_class):
            k += 1
        label = SignalClass(k)
    teacher = f"uniform:{spec.correct_ratio:g}"
    return LabelRecord(sample_id=ts.id, label=label, teacher=teacher, correct=label == ts.gt_class)


def confusion_label(ts: TimeSeries, model: ConfusionModel, rng: np.random.Generator) -> LabelRecord:
    row = model.matrix[int(ts.gt_class)]
    label = SignalClass(int(rng.choice(N_CLASSES, p=row)))
    return LabelRecord(
        sample_id=ts.id, label=label, teacher="confusion", correct=label == ts.gt_class
    )


def systematic_label(ts: TimeSeries) -> LabelRecord:
    """Deterministic feature-coupled errors: central-root cubics become sigmoid."""
    if ts.params is None:
        raise ValidationError(f"systematic teacher needs generator params (sample {ts.id})")
    label = ts.gt_class
    if ts.gt_class is SignalClass.CUBIC_FUNCTION:
        r2 = ts.params.shape["root2"]
        if SYSTEMATIC_BAND[0] <= r2 <= SYSTEMATIC_BAND[1]:
            label = SignalClass.SIGMOID
    return LabelRecord(
        sample_id=ts.id, label=label, teacher="systematic", correct=label == ts.gt_class
    )


def in_systematic_band(ts: TimeSeries) -> bool:
    return (
        ts.gt_class is SignalClass.CUBIC_FUNCTION
        and SYSTEMATIC_BAND[0] <= ts.params.shape["root2"] <= SYSTEMATIC_BAND[1]
    )


class Teacher:
    """Interface: label(ts, rng) -> LabelRecord. Deterministic teachers ignore rng."""

    name: str = "teacher"
    stochastic: bool = False

    def label(self, ts: TimeSeries, rng: np.random.Generator | None = None) -> LabelRecord:
        raise NotImplementedError


class OracleTeacher(Teacher):
    name = "oracle"

    def label(self, ts: TimeSeries, rng=None) -> LabelRecord:
        return oracle_label(ts)


class UniformNoiseTeacher(Teacher):
    stochastic = True

    def __init__(self, spec: NoiseSpec) -> None:
        self.spec = spec
        self.name = f"uniform:{spec.correct_ratio:g}"

    def label(self, ts: TimeSeries, rng=None) -> LabelRecord:
        if rng is None:
            raise ValidationError("uniform noise teacher needs an rng")
        return uniform_noise_label(ts, self.spec, rng)


class ConfusionTeacher(Teacher):
    name = "confusion"
    stochastic = True

    def __init__(self, model: ConfusionModel) -> None:
        self.model = model

    def label(self, ts: TimeSeries, rng=None) -> LabelRecord:
        if rng is None:
            raise ValidationError("confusion teacher needs an rng")
        return confusion_label(ts, self.model, rng)


class SystematicTeacher(Teacher):
    name = "systematic"

    def label(self, ts: TimeSeries, rng=None) -> LabelRecord:
        return systematic_label(ts)


def label_samples(
    samples: list[TimeSeries],
    teacher: Teacher,
    rng: np.random.Generator | None = None,
) -> list[LabelRecord]:
    """Label a batch with a local teacher, one rng draw sequence over the list."""
    return [teacher.label(ts, rng) for ts in samples]

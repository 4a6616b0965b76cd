"""The four scripted studies, each a deterministic function of spec + config."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from ..errors import ValidationError
from ..labeler.records import NoiseSpec, default_confusion_model
from ..labeler.teachers import (
    ConfusionTeacher,
    OracleTeacher,
    SystematicTeacher,
    Teacher,
    UniformNoiseTeacher,
    in_systematic_band,
    systematic_label,
    oracle_label,
)
from ..nncore import Model, predict
from ..rng import derive_seed, stream
from ..signalgen import (
    Dataset,
    DatasetSpec,
    N_CLASSES,
    SignalClass,
    TimeSeries,
    assign_splits,
    build_samples,
    subsample_train,
)
from ..trainer import (
    TrainConfig,
    TrialsResult,
    TrialSummary,
    evaluate,
    run_trials,
    summarize,
    train,
)
from .embedding import EmbeddingProjection, embed_and_project

CHANCE_ACCURACY = 1.0 / N_CLASSES
DEFAULT_SIZE_GRID = (90, 300, 900, 3000, 9000)


@dataclass
class Table1Result:
    chance: float
    teacher_train: TrialSummary
    teacher_test: TrialSummary
    student_pseudo_train: TrialSummary
    student_pseudo_test: TrialSummary
    student_gt_train: TrialSummary
    student_gt_test: TrialSummary
    pseudo_runs: TrialsResult
    gt_runs: TrialsResult


def compare_table1(
    spec: DatasetSpec,
    config: TrainConfig,
    teacher: Teacher | None = None,
    jobs: int = 1,
) -> Table1Result:
    """Teacher vs student-on-pseudo vs student-on-ground-truth, same splits.

    Both student runs share the per-trial split and init streams (they key
    off config.base_seed only), so every row is computed under identical
    conditions; the chance row is the analytic 1/10.
    """
    if teacher is None:
        teacher = ConfusionTeacher(default_confusion_model())
    pool = build_samples(spec)
    pseudo = run_trials(spec, teacher, config, jobs=jobs, pool=pool)
    gt = run_trials(spec, OracleTeacher(), config, jobs=jobs, pool=pool)
    return Table1Result(
        chance=CHANCE_ACCURACY,
        teacher_train=summarize([t.teacher_train_accuracy for t in pseudo.trials]),
        teacher_test=summarize([t.teacher_test_accuracy for t in pseudo.trials]),
        student_pseudo_train=summarize([t.train.accuracy for t in pseudo.trials]),
        student_pseudo_test=pseudo.summary,
        student_gt_train=summarize([t.train.accuracy for t in gt.trials]),
        student_gt_test=gt.summary,
        pseudo_runs=pseudo,
        gt_runs=gt,
    )


@dataclass
class SweepResult:
    swept: str
    grid: list[float]
    summaries: list[TrialSummary]
    runs: list[TrialsResult] = field(default_factory=list)

    def __post_init__(self) -> None:
        if len(self.grid) != len(self.summaries):
            raise ValidationError("grid and summaries must have the same length")


def noise_ratio_sweep(
    ratios: list[float],
    spec: DatasetSpec,
    config: TrainConfig,
    jobs: int = 1,
) -> SweepResult:
    """Five-trial summaries at each correct-label ratio, fixed train size."""
    for rho in ratios:
        if not (0.0 <= rho <= 1.0):
            raise ValidationError(f"correct-label ratio {rho} outside [0, 1]")
    pool = build_samples(spec)
    runs = [
        run_trials(spec, UniformNoiseTeacher(NoiseSpec(rho)), config, jobs=jobs, pool=pool)
        for rho in ratios
    ]
    return SweepResult(
        swept="correct_ratio",
        grid=[float(r) for r in ratios],
        summaries=[r.summary for r in runs],
        runs=runs,
    )


def sample_size_sweep(
    sizes: list[int],
    spec: DatasetSpec,
    config: TrainConfig,
    jobs: int = 1,
) -> SweepResult:
    """Five-trial summaries at each training-set size, oracle labels."""
    full = spec.split_counts()["train"] * N_CLASSES
    for size in sizes:
        if size % N_CLASSES != 0:
            raise ValidationError(f"size {size} not divisible by {N_CLASSES}")
        if size > full:
            raise ValidationError(f"size {size} exceeds the train split ({full})")
    pool = build_samples(spec)
    runs = []
    for size in sizes:
        def shrink(dataset: Dataset, trial: int, _size=size) -> Dataset:
            return subsample_train(dataset, _size, stream(config.base_seed, "subsample", _size, trial))

        runs.append(
            run_trials(
                spec, OracleTeacher(), config, jobs=jobs, pool=pool, train_transform=shrink
            )
        )
    return SweepResult(
        swept="train_size",
        grid=[float(s) for s in sizes],
        summaries=[r.summary for r in runs],
        runs=runs,
    )


@dataclass
class InheritanceReport:
    """Systematic-error inheritance vs a uniform-noise control of equal error mass."""

    n_teacher_errors: int
    region_test_ids: list[str]
    treatment_region_predictions: list[int]
    control_region_predictions: list[int]
    inheritance_rate: float  # fraction of region test cubics the treatment student calls sigmoid
    control_error_rate: float  # fraction of the same region the control student gets wrong
    treatment_test_accuracy: float
    control_test_accuracy: float
    train_projection: EmbeddingProjection | None = None
    test_projection: EmbeddingProjection | None = None


def _matched_control_labels(
    train_samples: list[TimeSeries], n_errors: int, rng: np.random.Generator
) -> dict[str, int]:
    """Oracle labels with exactly ``n_errors`` uniform flips, matching the
    treatment arm's error mass."""
    labels = {ts.id: int(ts.gt_class) for ts in train_samples}
    flip_idx = rng.choice(len(train_samples), size=n_errors, replace=False)
    for i in flip_idx:
        ts = train_samples[int(i)]
        k = int(rng.integers(0, N_CLASSES - 1))
        if k >= int(ts.gt_class):
            k += 1
        labels[ts.id] = k
    return labels


def inheritance_study(
    spec: DatasetSpec,
    config: TrainConfig,
    with_projections: bool = True,
) -> InheritanceReport:
    """Train one student per arm and measure error propagation on held-out
    predicate-region cubics."""
    pool = build_samples(spec)
    dataset = assign_splits(pool, spec, stream(config.base_seed, "split", 0))
    init_seed = derive_seed(config.base_seed, "init", 0)

    treatment_records = [systematic_label(ts) for ts in dataset.train]
    treatment_labels = {r.sample_id: int(r.label) for r in treatment_records}
    n_errors = sum(1 for r in treatment_records if not r.correct)
    control_labels = _matched_control_labels(
        dataset.train, n_errors, stream(config.base_seed, "control-flip", 0)
    )

    treatment_model, _ = train(dataset.train, treatment_labels, dataset.val, config, init_seed)
    control_model, _ = train(dataset.train, control_labels, dataset.val, config, init_seed)

    region_test = [ts for ts in dataset.test if in_systematic_band(ts)]
    if not region_test:
        raise ValidationError("no predicate-region cubics in the test split; enlarge the dataset")
    x_region = np.stack([ts.values for ts in region_test])
    treat_pred = predict(treatment_model, x_region)
    control_pred = predict(control_model, x_region)
    inheritance_rate = float((treat_pred == int(SignalClass.SIGMOID)).mean())
    control_error_rate = float((control_pred != int(SignalClass.CUBIC_FUNCTION)).mean())

    train_proj = test_proj = None
    if with_projections:
        train_cubics = [ts for ts in dataset.train if ts.gt_class is SignalClass.CUBIC_FUNCTION]
        test_cubics = [ts for ts in dataset.test if ts.gt_class is SignalClass.CUBIC_FUNCTION]
        train_proj = embed_and_project(
            treatment_model, train_cubics, {ts.id: treatment_labels[ts.id] for ts in train_cubics}
        )
        test_proj = embed_and_project(treatment_model, test_cubics, labels_by_id=None)

    return InheritanceReport(
        n_teacher_errors=n_errors,
        region_test_ids=[ts.id for ts in region_test],
        treatment_region_predictions=[int(p) for p in treat_pred],
        control_region_predictions=[int(p) for p in control_pred],
        inheritance_rate=inheritance_rate,
        control_error_rate=control_error_rate,
        treatment_test_accuracy=evaluate(treatment_model, dataset.test).accuracy,
        control_test_accuracy=evaluate(control_model, dataset.test).accuracy,
        train_projection=train_proj,
        test_projection=test_proj,
    )

"""Training loop, validation-based model selection, multi-trial orchestration.

Validation accuracy is measured against ground truth even when training on
pseudo labels (the accuracy we report is ground-truth accuracy, so model
selection uses the same yardstick); set ``validate_on="pseudo"`` to ablate.
Trial t derives its split stream from (base_seed, "split", t) and its init
seed from (base_seed, "init", t); stochastic teachers relabel each trial from
(base_seed, "labels", t).
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterator, Sequence

import numpy as np

from .errors import ValidationError
from .labeler.records import LabelRecord
from .labeler.teachers import Teacher
from .nncore import (
    NUM_CLASSES,
    ArchConfig,
    LrSchedulerState,
    Model,
    adamw_step,
    backward,
    cross_entropy,
    forward,
    init_adamw,
    init_model,
    predict,
    scheduler_step,
)
from .rng import derive_seed, stream
from .signalgen import Dataset, DatasetSpec, TimeSeries, assign_splits, build_samples


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 100
    batch_size: int = 32
    lr: float = 1e-4
    weight_decay: float = 0.01
    scheduler_factor: float = 0.5
    scheduler_patience: int = 2
    trials: int = 5
    base_seed: int = 0
    shuffle: bool = True
    validate_on: str = "ground_truth"  # or "pseudo"
    stop_patience: int | None = None  # stop early after this many epochs without val improvement
    arch: ArchConfig | None = None

    def __post_init__(self) -> None:
        if self.epochs < 1:
            raise ValidationError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ValidationError("batch_size must be >= 1")
        if self.trials < 1:
            raise ValidationError("trials must be >= 1")
        if self.stop_patience is not None and self.stop_patience < 1:
            raise ValidationError("stop_patience must be >= 1")
        if self.validate_on not in ("ground_truth", "pseudo"):
            raise ValidationError(f"unknown validate_on {self.validate_on!r}")

    def arch_for(self, input_length: int) -> ArchConfig:
        if self.arch is not None:
            return self.arch
        return ArchConfig(input_length=input_length)


@dataclass
class TrainHistory:
    train_loss: list[float] = field(default_factory=list)
    val_accuracy: list[float] = field(default_factory=list)
    lr: list[float] = field(default_factory=list)
    best_epoch: int = -1
    best_val_accuracy: float = float("-inf")


@dataclass
class EvalResult:
    accuracy: float
    confusion: np.ndarray  # (10, 10) int counts, rows = true class
    per_class_recall: np.ndarray

    @property
    def total(self) -> int:
        return int(self.confusion.sum())


@dataclass
class TrialSummary:
    accuracies: list[float]
    mean: float
    std: float  # sample std (n-1); 0.0 by convention for a single trial


@dataclass
class TrialResult:
    trial: int
    history: TrainHistory
    test: EvalResult
    train: EvalResult
    teacher_train_accuracy: float
    teacher_test_accuracy: float
    n_excluded: int = 0


@dataclass
class TrialsResult:
    teacher: str
    config: TrainConfig
    trials: list[TrialResult]
    summary: TrialSummary  # over per-trial test accuracies
    models: list[Model] = field(default_factory=list)


def summarize(accuracies: Sequence[float]) -> TrialSummary:
    accs = [float(a) for a in accuracies]
    mean = float(np.mean(accs))
    std = float(np.std(accs, ddof=1)) if len(accs) > 1 else 0.0
    return TrialSummary(accuracies=accs, mean=mean, std=std)


def epoch_batches(
    n: int, batch_size: int, rng: np.random.Generator, shuffle: bool = True
) -> Iterator[np.ndarray]:
    """Mini-batch index blocks covering every sample exactly once; the last
    partial batch is kept."""
    order = rng.permutation(n) if shuffle else np.arange(n)
    for start in range(0, n, batch_size):
        yield order[start : start + batch_size]


def _stack(samples: Sequence[TimeSeries]) -> np.ndarray:
    return np.stack([ts.values for ts in samples])


def _label_array(samples: Sequence[TimeSeries], labels_by_id: dict[str, int]) -> np.ndarray:
    out = np.empty(len(samples), dtype=np.int64)
    for i, ts in enumerate(samples):
        if ts.id not in labels_by_id:
            raise ValidationError(f"no label for training sample {ts.id}")
        out[i] = labels_by_id[ts.id]
    return out


def labels_to_map(records: Sequence[LabelRecord], known_ids: set[str] | None = None) -> dict[str, int]:
    out: dict[str, int] = {}
    for rec in records:
        if known_ids is not None and rec.sample_id not in known_ids:
            raise ValidationError(f"label references unknown sample id {rec.sample_id!r}")
        out[rec.sample_id] = int(rec.label)
    return out


def _accuracy(model: Model, x: np.ndarray, y: np.ndarray) -> float:
    return float((predict(model, x) == y).mean())


def train(
    train_samples: Sequence[TimeSeries],
    labels_by_id: dict[str, int],
    val_samples: Sequence[TimeSeries],
    config: TrainConfig,
    seed: int,
    val_labels_by_id: dict[str, int] | None = None,
) -> tuple[Model, TrainHistory]:
    """Train on pseudo labels, return the checkpoint from the best val epoch.

    ``seed`` drives both the parameter init (via (seed, "init")) and the
    epoch shuffles (via (seed, "shuffle")). Ties on validation accuracy keep
    the earliest epoch. With ``config.stop_patience`` set, training ends once
    validation accuracy has not improved for that many epochs (the selected
    checkpoint is unaffected unless the true best lies beyond the stop).
    """
    if not train_samples:
        raise ValidationError("training set is empty")
    if not val_samples:
        raise ValidationError("validation set is empty")
    known = {ts.id for ts in train_samples}
    unknown = set(labels_by_id) - known
    if unknown:
        raise ValidationError(f"labels reference unknown sample ids: {sorted(unknown)[:3]}")
    x_train = _stack(train_samples)
    y_train = _label_array(train_samples, labels_by_id)
    x_val = _stack(val_samples)
    if config.validate_on == "pseudo":
        if val_labels_by_id is None:
            raise ValidationError("validate_on='pseudo' needs validation labels")
        y_val = _label_array(val_samples, val_labels_by_id)
    else:
        y_val = np.array([int(ts.gt_class) for ts in val_samples], dtype=np.int64)

    model = init_model(config.arch_for(x_train.shape[1]), seed)
    opt = init_adamw(model.params, lr=config.lr, weight_decay=config.weight_decay)
    sched = LrSchedulerState(
        lr=config.lr, factor=config.scheduler_factor, patience=config.scheduler_patience
    )
    shuffle_rng = stream(seed, "shuffle")
    history = TrainHistory()
    best_params: dict[str, np.ndarray] | None = None

    n = x_train.shape[0]
    for epoch in range(config.epochs):
        total_loss = 0.0
        for idx in epoch_batches(n, config.batch_size, shuffle_rng, config.shuffle):
            logits, cache = forward(model, x_train[idx], want_cache=True)
            loss, dlogits = cross_entropy(logits, y_train[idx])
            grads = backward(model, cache, dlogits)
            adamw_step(model.params, grads, opt)
            total_loss += loss * idx.size
        val_acc = _accuracy(model, x_val, y_val)
        history.train_loss.append(total_loss / n)
        history.val_accuracy.append(val_acc)
        history.lr.append(opt.lr)
        if val_acc > history.best_val_accuracy:
            history.best_val_accuracy = val_acc
            history.best_epoch = epoch
            best_params = {k: v.copy() for k, v in model.params.items()}
        scheduler_step(sched, val_acc)
        opt.lr = sched.lr
        if (
            config.stop_patience is not None
            and epoch - history.best_epoch >= config.stop_patience
        ):
            break

    assert best_params is not None
    return Model(arch=model.arch, params=best_params, seed=model.seed), history


def evaluate_predictions(y_true: np.ndarray, y_pred: np.ndarray) -> EvalResult:
    y_true = np.asarray(y_true, dtype=np.int64)
    y_pred = np.asarray(y_pred, dtype=np.int64)
    if y_true.size == 0:
        raise ValidationError("cannot evaluate an empty split")
    confusion = np.zeros((NUM_CLASSES, NUM_CLASSES), dtype=np.int64)
    np.add.at(confusion, (y_true, y_pred), 1)
    row_sums = confusion.sum(axis=1)
    recall = np.divide(
        np.diag(confusion), row_sums, out=np.zeros(NUM_CLASSES), where=row_sums > 0
    )
    accuracy = float(np.trace(confusion) / confusion.sum())
    return EvalResult(accuracy=accuracy, confusion=confusion, per_class_recall=recall)


def evaluate(model: Model, samples: Sequence[TimeSeries]) -> EvalResult:
    """Accuracy and confusion counts against ground truth."""
    if not samples:
        raise ValidationError("cannot evaluate an empty split")
    y_true = np.array([int(ts.gt_class) for ts in samples], dtype=np.int64)
    y_pred = predict(model, _stack(samples))
    return evaluate_predictions(y_true, y_pred)


def teacher_quality(
    records: Sequence[LabelRecord], samples: Sequence[TimeSeries]
) -> tuple[float, int, int]:
    """(accuracy of pseudo labels vs ground truth, n labeled, n excluded)."""
    gt = {ts.id: int(ts.gt_class) for ts in samples}
    labeled = [r for r in records if r.sample_id in gt]
    if not labeled:
        raise ValidationError("no labels overlap the given samples")
    n_correct = sum(1 for r in labeled if int(r.label) == gt[r.sample_id])
    n_excluded = len(samples) - len(labeled)
    return n_correct / len(labeled), len(labeled), n_excluded


TrainTransform = Callable[[Dataset, int], Dataset]


def run_single_trial(
    pool: list[TimeSeries],
    spec: DatasetSpec,
    teacher: Teacher,
    config: TrainConfig,
    trial: int,
    train_transform: TrainTransform | None = None,
) -> tuple[TrialResult, Model]:
    dataset = assign_splits(pool, spec, stream(config.base_seed, "split", trial))
    if train_transform is not None:
        dataset = train_transform(dataset, trial)
    label_rng = stream(config.base_seed, "labels", trial)
    train_records = [teacher.label(ts, label_rng) for ts in dataset.train]
    teacher_train_acc, _, _ = teacher_quality(train_records, dataset.train)
    # teacher accuracy on test for reporting; these labels never feed training
    test_label_rng = stream(config.base_seed, "labels-test", trial)
    test_records = [teacher.label(ts, test_label_rng) for ts in dataset.test]
    teacher_test_acc, _, _ = teacher_quality(test_records, dataset.test)

    labels_by_id = labels_to_map(train_records)
    val_labels = None
    if config.validate_on == "pseudo":
        val_rng = stream(config.base_seed, "labels-val", trial)
        val_labels = labels_to_map([teacher.label(ts, val_rng) for ts in dataset.val])
    init_seed = derive_seed(config.base_seed, "init", trial)
    model, history = train(
        dataset.train, labels_by_id, dataset.val, config, init_seed, val_labels
    )
    return TrialResult(
        trial=trial,
        history=history,
        test=evaluate(model, dataset.test),
        train=evaluate(model, dataset.train),
        teacher_train_accuracy=teacher_train_acc,
        teacher_test_accuracy=teacher_test_acc,
    ), model


def run_trials(
    spec: DatasetSpec,
    teacher: Teacher,
    config: TrainConfig,
    jobs: int = 1,
    pool: list[TimeSeries] | None = None,
    train_transform: TrainTransform | None = None,
    keep_models: bool = False,
) -> TrialsResult:
    """Train ``config.trials`` students, varying split and initialization.

    The sample pool is generated once from the spec; each trial re-splits it.
    Trials are independent, so they may run on a small worker pool; results
    are joined in trial order either way.
    """
    if pool is None:
        pool = build_samples(spec)

    def one(t: int):
        return run_single_trial(pool, spec, teacher, config, t, train_transform)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as ex:
            outcomes = list(ex.map(one, range(config.trials)))
    else:
        outcomes = [one(t) for t in range(config.trials)]
    results = [r for r, _ in outcomes]
    models = [m for _, m in outcomes]
    summary = summarize([r.test.accuracy for r in results])
    return TrialsResult(
        teacher=teacher.name,
        config=config,
        trials=results,
        summary=summary,
        models=models if keep_models else [],
    )

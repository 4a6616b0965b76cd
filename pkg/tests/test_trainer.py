import numpy as np
import pytest

from sigdistill.errors import ValidationError
from sigdistill.labeler import OracleTeacher, UniformNoiseTeacher
from sigdistill.labeler.records import NoiseSpec
from sigdistill.nncore import forward
from sigdistill.rng import stream
from sigdistill.trainer import (
    TrainConfig,
    epoch_batches,
    evaluate,
    evaluate_predictions,
    labels_to_map,
    run_trials,
    summarize,
    teacher_quality,
    train,
)
from sigdistill.labeler import oracle_label

from conftest import TINY_ARCH

TINY_CONFIG = TrainConfig(
    epochs=4, batch_size=16, lr=3e-3, trials=2, base_seed=3, arch=TINY_ARCH
)


def oracle_map(samples):
    return {ts.id: int(ts.gt_class) for ts in samples}


class TestEpochBatches:
    @pytest.mark.parametrize("n,batch", [(10, 3), (32, 32), (33, 32), (7, 16)])
    def test_every_sample_exactly_once(self, n, batch):
        batches = list(epoch_batches(n, batch, stream(0, "b")))
        assert sorted(np.concatenate(batches).tolist()) == list(range(n))
        assert len(batches) == -(-n // batch)  # last partial batch kept

    def test_shuffle_off_is_sequential(self):
        batches = list(epoch_batches(10, 4, stream(0, "b"), shuffle=False))
        assert np.concatenate(batches).tolist() == list(range(10))


class TestTrain:
    def test_deterministic(self, tiny_dataset):
        labels = oracle_map(tiny_dataset.train)
        m1, h1 = train(tiny_dataset.train, labels, tiny_dataset.val, TINY_CONFIG, seed=9)
        m2, h2 = train(tiny_dataset.train, labels, tiny_dataset.val, TINY_CONFIG, seed=9)
        assert h1.val_accuracy == h2.val_accuracy
        assert h1.train_loss == h2.train_loss
        for k in m1.params:
            assert m1.params[k].tobytes() == m2.params[k].tobytes()

    def test_best_epoch_checkpoint_reproduces_best_val(self, tiny_dataset):
        labels = oracle_map(tiny_dataset.train)
        model, history = train(tiny_dataset.train, labels, tiny_dataset.val, TINY_CONFIG, seed=1)
        assert history.best_epoch == int(np.argmax(history.val_accuracy))
        x_val = np.stack([ts.values for ts in tiny_dataset.val])
        y_val = np.array([int(ts.gt_class) for ts in tiny_dataset.val])
        preds = np.argmax(forward(model, x_val), axis=1)
        assert float(np.mean(preds == y_val)) == history.best_val_accuracy

    def test_empty_training_set_rejected(self, tiny_dataset):
        with pytest.raises(ValidationError):
            train([], {}, tiny_dataset.val, TINY_CONFIG, seed=0)

    def test_zero_epochs_rejected(self):
        with pytest.raises(ValidationError):
            TrainConfig(epochs=0)

    def test_unknown_label_id_rejected(self, tiny_dataset):
        labels = oracle_map(tiny_dataset.train)
        labels["nonexistent"] = 3
        with pytest.raises(ValidationError):
            train(tiny_dataset.train, labels, tiny_dataset.val, TINY_CONFIG, seed=0)

    def test_missing_label_rejected(self, tiny_dataset):
        labels = oracle_map(tiny_dataset.train)
        labels.pop(tiny_dataset.train[0].id)
        with pytest.raises(ValidationError):
            train(tiny_dataset.train, labels, tiny_dataset.val, TINY_CONFIG, seed=0)

    def test_early_stop_shortens_history(self, tiny_dataset):
        labels = oracle_map(tiny_dataset.train)
        config = TrainConfig(
            epochs=50, batch_size=16, lr=3e-3, trials=1, base_seed=3,
            stop_patience=3, arch=TINY_ARCH,
        )
        _, history = train(tiny_dataset.train, labels, tiny_dataset.val, config, seed=2)
        assert len(history.val_accuracy) <= 50
        last_best = history.best_epoch
        assert len(history.val_accuracy) - 1 - last_best >= 3 or len(history.val_accuracy) == 50

    def test_pseudo_validation_switch(self, tiny_dataset):
        labels = oracle_map(tiny_dataset.train)
        config = TrainConfig(
            epochs=2, batch_size=16, lr=1e-3, trials=1, base_seed=3,
            validate_on="pseudo", arch=TINY_ARCH,
        )
        with pytest.raises(ValidationError):
            train(tiny_dataset.train, labels, tiny_dataset.val, config, seed=0)
        val_labels = oracle_map(tiny_dataset.val)
        model, history = train(
            tiny_dataset.train, labels, tiny_dataset.val, config, seed=0, val_labels_by_id=val_labels
        )
        assert len(history.val_accuracy) == 2


class TestEvaluate:
    def test_oracle_mimic_stub(self):
        y = np.repeat(np.arange(10), 5)
        result = evaluate_predictions(y, y)
        assert result.accuracy == 1.0
        assert np.array_equal(result.confusion, np.diag(np.full(10, 5)))
        assert np.all(result.per_class_recall == 1.0)

    def test_constant_prediction_stub_on_balanced_split(self):
        y = np.repeat(np.arange(10), 7)
        result = evaluate_predictions(y, np.zeros_like(y))
        assert result.accuracy == pytest.approx(0.1)

    def test_row_sums_equal_class_counts(self, tiny_dataset):
        labels = oracle_map(tiny_dataset.train)
        model, _ = train(tiny_dataset.train, labels, tiny_dataset.val, TINY_CONFIG, seed=4)
        result = evaluate(model, tiny_dataset.test)
        counts = np.array(
            [sum(1 for ts in tiny_dataset.test if int(ts.gt_class) == i) for i in range(10)]
        )
        assert np.array_equal(result.confusion.sum(axis=1), counts)
        assert result.accuracy == pytest.approx(
            np.trace(result.confusion) / result.confusion.sum()
        )

    def test_empty_split_rejected(self):
        with pytest.raises(ValidationError):
            evaluate_predictions(np.array([]), np.array([]))


class TestTeacherQuality:
    def test_oracle_is_exactly_one(self, tiny_dataset):
        records = [oracle_label(ts) for ts in tiny_dataset.train]
        quality, n_labeled, n_excluded = teacher_quality(records, tiny_dataset.train)
        assert quality == 1.0
        assert n_labeled == len(tiny_dataset.train)
        assert n_excluded == 0

    def test_exclusions_counted_separately(self, tiny_dataset):
        records = [oracle_label(ts) for ts in tiny_dataset.train[:-5]]
        quality, n_labeled, n_excluded = teacher_quality(records, tiny_dataset.train)
        assert quality == 1.0
        assert n_excluded == 5


class TestRunTrials:
    def test_single_trial_std_zero(self, tiny_spec):
        config = TrainConfig(epochs=2, batch_size=16, lr=1e-3, trials=1, base_seed=5, arch=TINY_ARCH)
        result = run_trials(tiny_spec, OracleTeacher(), config)
        assert result.summary.std == 0.0
        assert result.summary.mean == result.trials[0].test.accuracy

    def test_same_base_seed_identical_summaries(self, tiny_spec):
        config = TrainConfig(epochs=2, batch_size=16, lr=1e-3, trials=2, base_seed=6, arch=TINY_ARCH)
        teacher = UniformNoiseTeacher(NoiseSpec(0.7))
        a = run_trials(tiny_spec, teacher, config)
        b = run_trials(tiny_spec, teacher, config)
        assert a.summary == b.summary
        assert [t.teacher_train_accuracy for t in a.trials] == [
            t.teacher_train_accuracy for t in b.trials
        ]

    def test_trials_vary_split_and_init(self, tiny_spec):
        config = TrainConfig(epochs=2, batch_size=16, lr=1e-3, trials=2, base_seed=7, arch=TINY_ARCH)
        result = run_trials(tiny_spec, OracleTeacher(), config, keep_models=True)
        assert len(result.trials) == 2
        m0, m1 = result.models
        assert any(
            not np.array_equal(m0.params[k], m1.params[k]) for k in m0.params
        )

    def test_parallel_matches_sequential(self, tiny_spec):
        config = TrainConfig(epochs=2, batch_size=16, lr=1e-3, trials=2, base_seed=8, arch=TINY_ARCH)
        teacher = UniformNoiseTeacher(NoiseSpec(0.5))
        seq = run_trials(tiny_spec, teacher, config, jobs=1)
        par = run_trials(tiny_spec, teacher, config, jobs=2)
        assert seq.summary == par.summary
        assert [t.test.accuracy for t in seq.trials] == [t.test.accuracy for t in par.trials]


def test_summarize_matches_numpy():
    s = summarize([0.5, 0.7, 0.9])
    assert s.mean == pytest.approx(np.mean([0.5, 0.7, 0.9]))
    assert s.std == pytest.approx(np.std([0.5, 0.7, 0.9], ddof=1))


def test_labels_to_map_rejects_unknown_ids(tiny_dataset):
    records = [oracle_label(tiny_dataset.train[0])]
    with pytest.raises(ValidationError):
        labels_to_map(records, known_ids={"other"})

import numpy as np
import pytest

from sigdistill.errors import ValidationError
from sigdistill.labeler import (
    ConfusionModel,
    LabelRecord,
    NoiseSpec,
    confusion_label,
    default_confusion_model,
    oracle_label,
    systematic_label,
    uniform_noise_label,
)
from sigdistill.labeler.teachers import SYSTEMATIC_BAND, in_systematic_band
from sigdistill.rng import stream
from sigdistill.signalgen import SignalClass, SignalParams, TimeSeries, generate


def make_ts(cls, shape, sample_id="s0"):
    params = SignalParams(cls, 1.0, 0.0, 0.0, shape)
    ts = generate(params, 64, sample_id=sample_id)
    return ts


class TestOracle:
    def test_constant_and_sigmoid(self):
        assert oracle_label(make_ts(SignalClass.CONSTANT, {})).label is SignalClass.CONSTANT
        rec = oracle_label(make_ts(SignalClass.SIGMOID, {"steepness": 10.0, "midpoint": 0.5}))
        assert rec.label is SignalClass.SIGMOID
        assert rec.correct is True
        assert rec.option_permutation == ()

    def test_full_split_perfect_quality(self, full_dataset):
        records = [oracle_label(ts) for ts in full_dataset.train]
        assert all(r.correct for r in records)
        assert sum(r.label == ts.gt_class for r, ts in zip(records, full_dataset.train)) == len(records)


class TestUniformNoise:
    def test_rho_one_always_truth(self, tiny_dataset):
        rng = stream(0, "u")
        spec = NoiseSpec(1.0)
        assert all(
            uniform_noise_label(ts, spec, rng).label is ts.gt_class for ts in tiny_dataset.train
        )

    def test_rho_zero_never_truth(self, tiny_dataset):
        rng = stream(0, "u")
        spec = NoiseSpec(0.0)
        assert all(
            uniform_noise_label(ts, spec, rng).label is not ts.gt_class
            for ts in tiny_dataset.train
        )

    def test_rho_08_quality_within_binomial_bounds(self, full_dataset):
        # 3-sigma band around 0.8 over 9000 draws is [0.787, 0.813] -> the
        # criterion window [0.78, 0.82] must hold
        rng = stream(1, "u")
        spec = NoiseSpec(0.8)
        records = [uniform_noise_label(ts, spec, rng) for ts in full_dataset.train]
        quality = np.mean([r.correct for r in records])
        assert 0.78 <= quality <= 0.82

    def test_wrong_labels_spread_uniformly(self, full_dataset):
        # each wrong class receives (1-rho)/9 of samples within 4 sigma
        rho = 0.5
        rng = stream(2, "u")
        spec = NoiseSpec(rho)
        counts = np.zeros((10, 10))
        for ts in full_dataset.train:
            rec = uniform_noise_label(ts, spec, rng)
            counts[int(ts.gt_class), int(rec.label)] += 1
        n_per_class = len(full_dataset.train) / 10
        p_wrong = (1 - rho) / 9
        sigma = np.sqrt(n_per_class * p_wrong * (1 - p_wrong))
        for i in range(10):
            for j in range(10):
                if i == j:
                    continue
                assert abs(counts[i, j] - n_per_class * p_wrong) < 4 * sigma

    def test_deterministic_under_stream(self, tiny_dataset):
        spec = NoiseSpec(0.6)
        a = [uniform_noise_label(ts, spec, stream(3, "u")).label for ts in tiny_dataset.train[:50]]
        # fresh stream with same key replays identically
        b = [uniform_noise_label(ts, spec, stream(3, "u")).label for ts in tiny_dataset.train[:50]]
        assert a == b

    def test_bad_ratio_rejected(self):
        with pytest.raises(ValidationError):
            NoiseSpec(1.2)


class TestConfusion:
    def test_identity_matrix_equals_oracle(self, tiny_dataset):
        model = ConfusionModel(np.eye(10))
        rng = stream(0, "c")
        for ts in tiny_dataset.samples:
            assert confusion_label(ts, model, rng).label is ts.gt_class

    def test_zero_diagonal_never_correct(self, tiny_dataset):
        m = np.eye(10)
        m[3, 3] = 0.0
        m[3, 4] = 1.0
        model = ConfusionModel(m)
        rng = stream(1, "c")
        for ts in tiny_dataset.samples:
            if ts.gt_class is SignalClass.CONCAVE:
                assert confusion_label(ts, model, rng).label is SignalClass.CONVEX

    def test_default_model_targets_teacher_quality(self, full_dataset):
        model = default_confusion_model()
        assert model.diagonal_mass() == pytest.approx(0.8171, abs=1e-12)
        rng = stream(2, "c")
        records = [confusion_label(ts, model, rng) for ts in full_dataset.train]
        quality = np.mean([r.correct for r in records])
        assert 0.79 <= quality <= 0.85

    def test_malformed_matrices_rejected(self):
        with pytest.raises(ValidationError):
            ConfusionModel(np.ones((10, 10)))
        with pytest.raises(ValidationError):
            ConfusionModel(np.zeros((9, 10)))
        bad = np.eye(10)
        bad[0, 1] = -0.1
        bad[0, 0] = 1.1
        with pytest.raises(ValidationError):
            ConfusionModel(bad)


class TestSystematic:
    def cubic(self, r2):
        return make_ts(
            SignalClass.CUBIC_FUNCTION, {"root1": 0.05, "root2": r2, "root3": 0.95}
        )

    def test_central_band_becomes_sigmoid(self):
        rec = systematic_label(self.cubic(0.5))
        assert rec.label is SignalClass.SIGMOID
        assert rec.correct is False

    def test_outside_band_kept(self):
        assert systematic_label(self.cubic(0.25)).label is SignalClass.CUBIC_FUNCTION

    def test_other_classes_untouched(self):
        ts = make_ts(SignalClass.GAUSSIAN, {"center": 0.5, "width": 0.1})
        assert systematic_label(ts).label is SignalClass.GAUSSIAN

    def test_pure_function(self):
        ts = self.cubic(0.45)
        assert systematic_label(ts) == systematic_label(ts)

    def test_band_predicate_helper(self):
        assert in_systematic_band(self.cubic(SYSTEMATIC_BAND[0]))
        assert not in_systematic_band(self.cubic(SYSTEMATIC_BAND[1] + 0.05))


def test_label_record_validates_permutation():
    with pytest.raises(ValidationError):
        LabelRecord(
            sample_id="x",
            label=SignalClass.CONSTANT,
            teacher="t",
            option_permutation=(0, 1, 2),
        )

import json

import numpy as np
import pytest

from sigdistill.errors import ArtifactError, ValidationError
from sigdistill.experiments import (
    compare_table1,
    embed_and_project,
    inheritance_study,
    noise_ratio_sweep,
    pca_project,
    sample_size_sweep,
)
from sigdistill.experiments.report import (
    inheritance_to_dict,
    render_sweep_csv,
    save_json,
    sweep_to_dict,
    table1_to_dict,
    write_report,
)
from sigdistill.experiments.runs import _matched_control_labels
from sigdistill.labeler import OracleTeacher, systematic_label
from sigdistill.labeler.teachers import in_systematic_band
from sigdistill.nncore import ArchConfig, init_model
from sigdistill.rng import stream
from sigdistill.signalgen import DatasetSpec, SignalClass
from sigdistill.trainer import TrainConfig

from conftest import TINY_ARCH

TINY_TRAIN = TrainConfig(epochs=2, batch_size=16, lr=1e-3, trials=2, base_seed=3, arch=TINY_ARCH)


@pytest.fixture(scope="module")
def tiny_noise_sweep(tiny_spec):
    return noise_ratio_sweep([1.0, 0.5], tiny_spec, TINY_TRAIN)


class TestSweeps:
    def test_shapes(self, tiny_noise_sweep):
        assert tiny_noise_sweep.grid == [1.0, 0.5]
        assert len(tiny_noise_sweep.summaries) == 2
        for s in tiny_noise_sweep.summaries:
            assert len(s.accuracies) == TINY_TRAIN.trials

    def test_summary_recomputable_from_raws(self, tiny_noise_sweep):
        for s in tiny_noise_sweep.summaries:
            assert abs(s.mean - np.mean(s.accuracies)) < 1e-12
            expected_std = np.std(s.accuracies, ddof=1) if len(s.accuracies) > 1 else 0.0
            assert abs(s.std - expected_std) < 1e-12

    def test_rho_one_equals_clean_training(self, tiny_spec, tiny_noise_sweep):
        from sigdistill.trainer import run_trials

        clean = run_trials(tiny_spec, OracleTeacher(), TINY_TRAIN)
        assert tiny_noise_sweep.summaries[0].accuracies == clean.summary.accuracies

    def test_bad_ratio_rejected(self, tiny_spec):
        with pytest.raises(ValidationError):
            noise_ratio_sweep([1.1], tiny_spec, TINY_TRAIN)

    def test_size_sweep_validates_grid(self, tiny_spec):
        with pytest.raises(ValidationError):
            sample_size_sweep([95], tiny_spec, TINY_TRAIN)
        with pytest.raises(ValidationError):
            sample_size_sweep([10_000_000], tiny_spec, TINY_TRAIN)

    def test_size_sweep_runs(self, tiny_spec):
        result = sample_size_sweep([50, 250], tiny_spec, TINY_TRAIN)
        assert result.swept == "train_size"
        assert len(result.summaries) == 2


class TestPca:
    def test_identical_samples_identical_coords(self):
        x = np.vstack([np.ones(8), np.ones(8), np.zeros(8), np.ones(8)])
        coords, _, _ = pca_project(x)
        np.testing.assert_allclose(coords[0], coords[1], atol=1e-12)
        np.testing.assert_allclose(coords[0], coords[3], atol=1e-12)

    def test_component_order_and_centering(self):
        rng = stream(0, "pca")
        x = rng.normal(size=(200, 6)) * np.array([5.0, 2.0, 1.0, 0.5, 0.2, 0.1])
        coords, comps, variances = pca_project(x)
        assert variances[0] >= variances[1]
        assert np.var(coords[:, 0]) >= np.var(coords[:, 1])
        np.testing.assert_allclose(coords.mean(axis=0), 0.0, atol=1e-6)

    def test_sign_convention_largest_loading_positive(self):
        rng = stream(1, "pca")
        x = rng.normal(size=(50, 5))
        _, comps, _ = pca_project(x)
        for comp in comps:
            assert comp[np.argmax(np.abs(comp))] > 0

    def test_deterministic(self):
        rng = stream(2, "pca")
        x = rng.normal(size=(40, 7))
        a, _, _ = pca_project(x)
        b, _, _ = pca_project(x)
        assert np.array_equal(a, b)

    def test_too_few_samples(self):
        with pytest.raises(ValidationError):
            pca_project(np.ones((2, 4)))


class TestEmbedding:
    def test_projection_fields_consistent(self, tiny_dataset):
        model = init_model(TINY_ARCH, 0)
        samples = tiny_dataset.train[:40]
        proj = embed_and_project(model, samples)
        assert len(proj.sample_ids) == 40
        assert proj.coords.shape == (40, 2)
        assert len(proj.assigned_label_ids) == 40
        assert proj.gt_ids == [int(ts.gt_class) for ts in samples]
        np.testing.assert_allclose(proj.coords.mean(axis=0), 0.0, atol=1e-6)

    def test_label_source_override(self, tiny_dataset):
        model = init_model(TINY_ARCH, 0)
        samples = tiny_dataset.train[:5]
        labels = {ts.id: 7 for ts in samples}
        proj = embed_and_project(model, samples, labels)
        assert proj.assigned_label_ids == [7] * 5


class TestMatchedControl:
    def test_exact_error_mass(self, tiny_dataset):
        labels = _matched_control_labels(tiny_dataset.train, 17, stream(0, "flip"))
        wrong = sum(
            1 for ts in tiny_dataset.train if labels[ts.id] != int(ts.gt_class)
        )
        assert wrong == 17

    def test_matches_systematic_error_mass(self, tiny_dataset):
        records = [systematic_label(ts) for ts in tiny_dataset.train]
        n_errors = sum(1 for r in records if not r.correct)
        assert n_errors == sum(1 for ts in tiny_dataset.train if in_systematic_band(ts))
        control = _matched_control_labels(tiny_dataset.train, n_errors, stream(1, "flip"))
        control_errors = sum(
            1 for ts in tiny_dataset.train if control[ts.id] != int(ts.gt_class)
        )
        assert control_errors == n_errors


@pytest.mark.slow
class TestInheritanceMechanics:
    @pytest.fixture(scope="class")
    def small_report(self):
        spec = DatasetSpec(n_per_class=120, length=128, seed=31)
        config = TrainConfig(
            epochs=25,
            lr=3e-3,
            trials=1,
            base_seed=9,
            arch=ArchConfig(input_length=128, conv_stages=((8, 7, 2), (16, 7, 2)), hidden=32),
        )
        return inheritance_study(spec, config)

    def test_rates_in_unit_interval(self, small_report):
        assert 0.0 <= small_report.inheritance_rate <= 1.0
        assert 0.0 <= small_report.control_error_rate <= 1.0
        assert small_report.n_teacher_errors > 0
        assert len(small_report.region_test_ids) > 0

    def test_projections_present(self, small_report):
        assert small_report.train_projection is not None
        assert small_report.test_projection is not None

    def test_region_cluster_is_sigmoid_labeled(self, small_report):
        # Fig-5-style check at small scale: the predicate-region cubics form a
        # coherent cluster in the projection and carry sigmoid pseudo labels.
        proj = small_report.train_projection
        coords = np.asarray(proj.coords)
        labels = np.asarray(proj.assigned_label_ids)
        region = labels == int(SignalClass.SIGMOID)
        assert region.sum() >= 5
        c_region = coords[region].mean(axis=0)
        c_rest = coords[~region].mean(axis=0)
        # nearest-centroid purity of the region cluster
        d_region = np.linalg.norm(coords - c_region, axis=1)
        d_rest = np.linalg.norm(coords - c_rest, axis=1)
        assigned_region = d_region < d_rest
        purity = (region & assigned_region).sum() / max(1, assigned_region.sum())
        assert purity > 0.9


class TestReport:
    def test_empty_run_dir_lists_expected(self, tmp_path):
        with pytest.raises(ArtifactError, match="table1.json"):
            write_report(tmp_path)
        (tmp_path / "results").mkdir()
        with pytest.raises(ArtifactError, match="noise_sweep.json"):
            write_report(tmp_path)

    def test_sweep_csv_row_contract(self, tiny_noise_sweep, tmp_path):
        d = sweep_to_dict(tiny_noise_sweep)
        csv = render_sweep_csv(d)
        lines = csv.strip().split("\n")
        grid, trials = len(d["grid"]), TINY_TRAIN.trials
        assert len(lines) == 1 + grid * trials + grid  # header + raws + summaries
        assert lines[0] == "value,kind,trial,accuracy,std"

    def test_rendered_report_is_reproducible(self, tiny_noise_sweep, tmp_path):
        run = tmp_path / "run"
        save_json(sweep_to_dict(tiny_noise_sweep), run / "results" / "noise_sweep.json")
        first = {p.name: p.read_bytes() for p in write_report(run)}
        second = {p.name: p.read_bytes() for p in write_report(run)}
        assert first == second

    def test_unknown_kind_rejected(self, tmp_path):
        run = tmp_path / "run"
        save_json({"kind": "mystery"}, run / "results" / "mystery.json")
        with pytest.raises(ArtifactError):
            write_report(run)


def test_compare_table1_tiny(tiny_spec):
    result = compare_table1(tiny_spec, TINY_TRAIN)
    assert result.chance == pytest.approx(0.1)
    d = table1_to_dict(result)
    assert set(d) >= {
        "chance",
        "teacher_train",
        "teacher_test",
        "student_pseudo_train",
        "student_pseudo_test",
        "student_gt_train",
        "student_gt_test",
    }
    # identical splits per trial: oracle teacher quality is 1 on both sides
    assert all(t.teacher_train_accuracy <= 1.0 for t in result.pseudo_runs.trials)
    assert result.gt_runs.trials[0].teacher_train_accuracy == 1.0

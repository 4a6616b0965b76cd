import time

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sigdistill.errors import ValidationError
from sigdistill.nncore import (
    AdamWState,
    ArchConfig,
    LrSchedulerState,
    adamw_step,
    backward,
    compare_gradients,
    cross_entropy,
    finite_difference_grads,
    forward,
    grad_check,
    init_adamw,
    init_model,
    load_checkpoint,
    param_count,
    save_checkpoint,
    scheduler_step,
    softmax,
)
from sigdistill.rng import stream

SMALL = ArchConfig(input_length=32, conv_stages=((4, 5, 2), (8, 5, 2)), hidden=16)


class TestModel:
    def test_default_param_count_closed_form(self):
        arch = ArchConfig(input_length=256)
        # conv0: 1*7*16 + 16, conv1: 16*7*32 + 32, fc1: 32*64 + 64, fc2: 64*10 + 10
        assert param_count(arch) == 128 + 3616 + 2112 + 650 == 6506

    def test_init_deterministic(self):
        a = init_model(SMALL, 5)
        b = init_model(SMALL, 5)
        for k in a.params:
            assert np.array_equal(a.params[k], b.params[k])

    def test_different_seeds_differ(self):
        a = init_model(SMALL, 5)
        b = init_model(SMALL, 6)
        assert any(not np.array_equal(a.params[k], b.params[k]) for k in a.params)

    def test_biases_zero_weights_fan_in_bounded(self):
        m = init_model(SMALL, 0)
        for name, p in m.params.items():
            if name.endswith(".b"):
                assert np.all(p == 0)
            else:
                assert np.max(np.abs(p)) <= 1.0 / np.sqrt(p.shape[0])

    def test_zero_signal_zeroed_head_gives_bias(self):
        m = init_model(SMALL, 1)
        m.params["fc2.w"][:] = 0.0
        m.params["fc2.b"][:] = np.arange(10, dtype=np.float64)
        logits = forward(m, np.zeros((3, SMALL.input_length)))
        np.testing.assert_array_equal(logits, np.tile(np.arange(10.0), (3, 1)))

    def test_duplicated_row_duplicates_logits(self):
        m = init_model(SMALL, 2)
        x = stream(3, "x").uniform(size=(4, SMALL.input_length))
        batch = np.vstack([x, x[1:2]])
        logits = forward(m, batch)
        np.testing.assert_array_equal(logits[4], logits[1])

    def test_batch_permutation_equivariance(self):
        m = init_model(SMALL, 2)
        x = stream(4, "x").uniform(size=(6, SMALL.input_length))
        perm = np.array([3, 1, 5, 0, 2, 4])
        np.testing.assert_allclose(forward(m, x)[perm], forward(m, x[perm]), atol=0)

    def test_shape_mismatch_rejected(self):
        m = init_model(SMALL, 0)
        with pytest.raises(ValidationError):
            forward(m, np.zeros((2, SMALL.input_length + 1)))


class TestCrossEntropy:
    def test_uniform_logits_ln10(self):
        loss, _ = cross_entropy(np.zeros((5, 10)), np.arange(5))
        assert loss == pytest.approx(np.log(10.0), abs=1e-12)

    def test_margin_monotonicity(self):
        losses = []
        for margin in (0.5, 1.0, 2.0, 4.0):
            logits = np.zeros((1, 10))
            logits[0, 3] = margin
            losses.append(cross_entropy(logits, np.array([3]))[0])
        assert losses == sorted(losses, reverse=True)

    def test_matches_high_precision_reference(self):
        rng = stream(8, "ce")
        logits = rng.normal(0, 3, size=(4, 10))
        labels = rng.integers(0, 10, size=4)
        loss, _ = cross_entropy(logits, labels)
        with mpmath.workdps(60):
            total = mpmath.mpf(0)
            for row, label in zip(logits, labels):
                lse = mpmath.log(mpmath.fsum(mpmath.e**mpmath.mpf(v) for v in row))
                total += lse - mpmath.mpf(row[int(label)])
            expected = float(total / 4)
        assert abs(loss - expected) < 1e-10

    def test_row_shift_invariance(self):
        rng = stream(9, "ce")
        logits = rng.normal(size=(3, 10))
        labels = np.array([0, 5, 9])
        base, _ = cross_entropy(logits, labels)
        shifted, _ = cross_entropy(logits + 123.456, labels)
        assert base == pytest.approx(shifted, abs=1e-9)

    def test_out_of_range_label(self):
        with pytest.raises(ValidationError):
            cross_entropy(np.zeros((2, 10)), np.array([0, 10]))

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=25, deadline=None)
    def test_softmax_rows_sum_to_one(self, seed):
        logits = np.random.default_rng(seed).normal(0, 50, size=(4, 10))
        np.testing.assert_allclose(softmax(logits).sum(axis=1), 1.0, atol=1e-9)


class TestBackward:
    def test_zero_upstream_gives_zero_grads(self):
        m = init_model(SMALL, 3)
        x = stream(1, "x").uniform(size=(2, SMALL.input_length))
        _, cache = forward(m, x, want_cache=True)
        grads = backward(m, cache, np.zeros((2, 10)))
        assert all(np.all(g == 0) for g in grads.values())

    def test_batch_duplication_leaves_mean_grads(self):
        m = init_model(SMALL, 4)
        x = stream(2, "x").uniform(size=(3, SMALL.input_length))
        y = np.array([1, 2, 3])
        logits, cache = forward(m, x, want_cache=True)
        _, d = cross_entropy(logits, y)
        g1 = backward(m, cache, d)
        x2, y2 = np.vstack([x, x]), np.concatenate([y, y])
        logits2, cache2 = forward(m, x2, want_cache=True)
        _, d2 = cross_entropy(logits2, y2)
        g2 = backward(m, cache2, d2)
        for k in g1:
            np.testing.assert_allclose(g1[k], g2[k], atol=1e-10)

    def test_backward_requires_cache(self):
        m = init_model(SMALL, 0)
        with pytest.raises(ValidationError):
            backward(m, {}, np.zeros((1, 10)))


class TestAdamW:
    def test_zero_grads_no_decay_is_identity(self):
        params = {"w": np.array([1.0, -2.0, 3.0])}
        state = init_adamw(params, lr=1e-3, weight_decay=0.0)
        before = params["w"].copy()
        adamw_step(params, {"w": np.zeros(3)}, state)
        np.testing.assert_array_equal(params["w"], before)

    def test_first_step_closed_form(self):
        # bias corrections cancel at t=1: step = -lr * g/(|g| + eps) - lr*wd*w
        params = {"w": np.array([2.0])}
        state = init_adamw(params, lr=1e-2, weight_decay=0.0)
        adamw_step(params, {"w": np.array([0.7])}, state)
        expected = 2.0 - 1e-2 * (0.7 / (0.7 + state.eps))
        assert params["w"][0] == pytest.approx(expected, abs=1e-12)
        assert params["w"][0] == pytest.approx(2.0 - 1e-2, abs=1e-6)

    def test_decay_shrinks_multiplicatively(self):
        params = {"w": np.array([5.0, -5.0])}
        state = init_adamw(params, lr=0.1, weight_decay=0.05)
        adamw_step(params, {"w": np.zeros(2)}, state)
        np.testing.assert_allclose(params["w"], np.array([5.0, -5.0]) * (1 - 0.1 * 0.05), atol=1e-15)

    def test_lr_zero_is_identity(self):
        params = {"w": np.array([1.0, 2.0])}
        state = init_adamw(params, lr=0.0, weight_decay=0.3)
        adamw_step(params, {"w": np.array([10.0, -10.0])}, state)
        np.testing.assert_array_equal(params["w"], np.array([1.0, 2.0]))

    def test_non_finite_gradient_names_parameter(self):
        params = {"fc1.w": np.ones(2)}
        state = init_adamw(params)
        with pytest.raises(ValidationError, match="fc1.w"):
            adamw_step(params, {"fc1.w": np.array([1.0, np.nan])}, state)


class TestScheduler:
    def run(self, accs, lr=1.0):
        state = LrSchedulerState(lr=lr)
        trace = []
        for a in accs:
            scheduler_step(state, a)
            trace.append(state.lr)
        return trace

    def test_improving_keeps_lr(self):
        assert self.run([0.5, 0.6, 0.7]) == [1.0, 1.0, 1.0]

    def test_two_stalls_halve(self):
        assert self.run([0.7, 0.7, 0.7]) == [1.0, 1.0, 0.5]

    def test_exactly_one_halving(self):
        assert self.run([0.7, 0.7, 0.71, 0.71, 0.71]) == [1.0, 1.0, 1.0, 1.0, 0.5]

    def test_accuracy_domain(self):
        state = LrSchedulerState(lr=1.0)
        with pytest.raises(ValidationError):
            scheduler_step(state, 1.5)


class TestGradCheck:
    def test_healthy_model_passes_quickly(self):
        start = time.monotonic()
        report = grad_check(seed=0, tolerance=1e-3)
        elapsed = time.monotonic() - start
        assert report.passed
        assert report.max_relative_error < 1e-3
        assert elapsed < 30.0

    def test_corrupted_gradient_names_parameter(self):
        m = init_model(SMALL, 0)
        rng = stream(0, "gc")
        x = rng.uniform(size=(4, SMALL.input_length))
        y = rng.integers(0, 10, size=4)
        logits, cache = forward(m, x, want_cache=True)
        _, d = cross_entropy(logits, y)
        analytic = backward(m, cache, d)
        reference = finite_difference_grads(m, x, y)
        analytic["conv0.b"] = analytic["conv0.b"] + 0.5
        report = compare_gradients(analytic, reference, tolerance=1e-3)
        assert not report.passed
        assert report.worst_param == "conv0.b"

    def test_infinite_tolerance_always_passes(self):
        report = grad_check(seed=1, tolerance=float("inf"))
        assert report.passed

    def test_rejects_large_models(self):
        with pytest.raises(ValidationError):
            grad_check(arch=ArchConfig(input_length=256))


class TestCheckpoint:
    def test_bit_exact_roundtrip(self, tmp_path):
        m = init_model(SMALL, 11)
        path = tmp_path / "m.ckpt"
        save_checkpoint(m, path, epoch=7, val_accuracy=0.93)
        loaded, header = load_checkpoint(path)
        assert header["epoch"] == 7
        assert header["val_accuracy"] == 0.93
        assert loaded.arch == m.arch
        assert loaded.seed == m.seed
        for k in m.params:
            assert m.params[k].tobytes() == loaded.params[k].tobytes()

    def test_rewrite_is_byte_identical(self, tmp_path):
        m = init_model(SMALL, 11)
        p1, p2 = tmp_path / "a.ckpt", tmp_path / "b.ckpt"
        save_checkpoint(m, p1, epoch=1, val_accuracy=0.5)
        loaded, _ = load_checkpoint(p1)
        save_checkpoint(loaded, p2, epoch=1, val_accuracy=0.5)
        assert p1.read_bytes() == p2.read_bytes()

    def test_garbage_rejected(self, tmp_path):
        path = tmp_path / "x.ckpt"
        path.write_bytes(b"\x80\x01garbage")
        from sigdistill.errors import ArtifactError

        with pytest.raises(ArtifactError):
            load_checkpoint(path)


def test_training_steps_bit_deterministic():
    def run():
        m = init_model(SMALL, 21)
        opt = init_adamw(m.params, lr=1e-3)
        rng = stream(5, "data")
        for _ in range(10):
            x = rng.uniform(size=(8, SMALL.input_length))
            y = rng.integers(0, 10, size=8)
            logits, cache = forward(m, x, want_cache=True)
            _, d = cross_entropy(logits, y)
            adamw_step(m.params, backward(m, cache, d), opt)
        return m

    a, b = run(), run()
    for k in a.params:
        assert a.params[k].tobytes() == b.params[k].tobytes()

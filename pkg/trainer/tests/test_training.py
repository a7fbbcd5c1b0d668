"""Training-loop behavior on small synthetic tasks."""

import numpy as np
import pytest
import torch

from notrainer import TrainRun, evaluate, load_dataset, rollout, train, write_metrics

from conftest import write_raw_dataset


def _smooth_fields(count, n=16, seed=7):
    rng = np.random.default_rng(seed)
    fields = rng.normal(size=(count, n, n))
    smooth = np.fft.irfft2(np.fft.rfft2(fields)[:, :4, :4], s=(n, n))
    return smooth / np.abs(smooth).max(axis=(1, 2), keepdims=True)


@pytest.fixture()
def copy_task(tmp_path):
    """Zero-gap pairs: output equals input, the degenerate identity task."""
    smooth = _smooth_fields(64)
    path = write_raw_dataset(tmp_path / "copy.ieda", smooth, smooth.copy(), dt=0.0)
    return path


@pytest.fixture()
def damped_shift_task(tmp_path):
    """Non-degenerate pairs: the output is the input shifted and damped."""
    smooth = _smooth_fields(64, seed=8)
    target = 0.8 * np.roll(smooth, 2, axis=-1)
    path = write_raw_dataset(tmp_path / "shift.ieda", smooth, target, dt=0.1)
    return path


class TestCopyTask:
    def test_identity_learned_quickly(self, copy_task):
        run = TrainRun(
            model_kind="spectral-operator", train_paths=[copy_task],
            test_path=str(copy_task), epochs=40, lr=5e-3, width=12, modes=6,
            seed=1,
        )
        result = train(run)
        assert result.final_test_error < 1e-3

    def test_same_seed_reproduces(self, copy_task):
        run = TrainRun(
            model_kind="spectral-operator", train_paths=[copy_task],
            test_path=str(copy_task), epochs=3, seed=5,
        )
        a = train(run)
        b = train(run)
        for la, lb in zip(a.train_losses, b.train_losses):
            assert la == pytest.approx(lb, abs=1e-6)

    def test_loss_trend_nonincreasing(self, copy_task):
        run = TrainRun(
            model_kind="spectral-operator", train_paths=[copy_task],
            epochs=24, lr=3e-3, seed=2,
        )
        result = train(run)
        losses = np.asarray(result.train_losses)
        window = 10
        smoothed = np.convolve(losses, np.ones(window) / window, mode="valid")
        assert all(b <= a + 1e-9 for a, b in zip(smoothed, smoothed[1:]))

    def test_encoder_decoder_trains(self, damped_shift_task):
        run = TrainRun(
            model_kind="encoder-decoder", train_paths=[damped_shift_task],
            test_path=str(damped_shift_task), epochs=15, lr=2e-3, width=8, seed=3,
        )
        result = train(run)
        assert result.train_losses[-1] < result.train_losses[0]


class TestEvaluate:
    def test_perfect_model_zero_error(self, copy_task):
        ds = load_dataset(copy_task)
        identity = torch.nn.Identity()
        assert evaluate(identity, ds) == pytest.approx(0.0, abs=1e-12)

    def test_untrained_worse_than_trained(self, damped_shift_task):
        ds = load_dataset(damped_shift_task)
        run = TrainRun(
            model_kind="spectral-operator", train_paths=[damped_shift_task],
            epochs=25, lr=5e-3, width=12, modes=6, seed=4,
        )
        trained = train(run).model
        torch.manual_seed(4)
        from notrainer import build_model

        untrained = build_model("spectral-operator", width=12, modes=6)
        assert evaluate(trained, ds) < evaluate(untrained, ds)


class TestRollout:
    def test_error_curve_shape(self, copy_task):
        ds = load_dataset(copy_task)
        states = np.stack([ds.inputs[0]] * 5)
        identity = torch.nn.Identity()
        errors = rollout(identity, states)
        assert len(errors) == 4
        assert all(e == pytest.approx(0.0, abs=1e-12) for e in errors)

    def test_recursive_growth_recorded(self, copy_task):
        run = TrainRun(
            model_kind="spectral-operator", train_paths=[copy_task],
            epochs=10, seed=6,
        )
        model = train(run).model
        ds = load_dataset(copy_task)
        states = np.stack([ds.inputs[i] for i in range(4)])
        errors = rollout(model, states)
        assert len(errors) == 3 and all(np.isfinite(errors))


def test_dimension_mismatch_is_configuration_error(tmp_path):
    rng = np.random.default_rng(9)
    path = write_raw_dataset(
        tmp_path / "oned.ieda", rng.normal(size=(4, 16)), rng.normal(size=(4, 16))
    )
    with pytest.raises(ValueError, match="2D"):
        train(TrainRun(train_paths=[path], epochs=1))


def test_metrics_written(tmp_path, copy_task):
    run = TrainRun(
        model_kind="spectral-operator", train_paths=[copy_task],
        test_path=str(copy_task), epochs=3, seed=8,
    )
    result = train(run)
    out = tmp_path / "metrics.txt"
    png = tmp_path / "loss.png"
    write_metrics(result, out, png)
    text = out.read_text()
    assert "final_test_error" in text and "train_losses" in text
    assert png.exists() and png.stat().st_size > 0

"""Tests for the CNN training loop."""
import numpy as np
import pytest

from seizure_cnn.arch import build_cnn11, build_from_layout
from seizure_cnn.config import OptimizerConfig, PostProcessConfig, TrainingConfig
from seizure_cnn.dsp import standardize_windows
from seizure_cnn.errors import DataError
from seizure_cnn.evaluation.training import (
    ValidationSubject,
    WindowSet,
    balanced_subset,
    train_model,
    validation_auc,
)

pytestmark = pytest.mark.unit

T = np.arange(256) / 32.0


def toy_windows(n_per_class: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Rhythmic 2 Hz windows (label 1) against white noise (label 0)."""
    rng = np.random.Generator(np.random.PCG64(seed))
    phase = rng.uniform(0, 2 * np.pi, size=(n_per_class, 1))
    rhythmic = np.sin(2 * np.pi * 2.0 * T + phase) + 0.3 * rng.standard_normal((n_per_class, 256))
    noise = rng.standard_normal((n_per_class, 256))
    windows = standardize_windows(np.vstack([rhythmic, noise]))
    labels = np.r_[np.ones(n_per_class), np.zeros(n_per_class)].astype(np.int8)
    return windows, labels


def toy_sets(n_per_class: int, seed: int):
    windows, labels = toy_windows(n_per_class, seed)
    train = WindowSet(windows, labels, np.full(labels.shape[0], "toy", dtype=object))
    return train, [ValidationSubject("toy", [windows], labels)]


class TestBalancedSubset:
    def test_equal_classes_without_replacement(self, rng):
        labels = np.r_[np.ones(30), np.zeros(300)].astype(int)
        idx = balanced_subset(labels, 40, rng)
        assert labels[idx].sum() == 20
        assert len(idx) == 40
        assert len(np.unique(idx)) == 40
        assert (np.diff(idx) > 0).all()

    def test_capped_by_minority_class(self, rng):
        labels = np.r_[np.ones(5), np.zeros(300)].astype(int)
        assert len(balanced_subset(labels, 100, rng)) == 10

    def test_single_class(self, rng):
        with pytest.raises(DataError):
            balanced_subset(np.zeros(10, dtype=int), 4, rng)

    def test_empty_subset(self, rng):
        with pytest.raises(DataError):
            balanced_subset(np.array([0, 1]), 1, rng)


class TestTrainModel:
    TINY = build_from_layout("tiny", "c4k5 bn p4s4 c2k5")

    def fast_config(self, epochs=2):
        return (
            OptimizerConfig(learning_rate=0.01, momentum=0.9, batch_size=16),
            TrainingConfig(epochs=epochs, max_train_fraction=1.0, validation_postprocess=False),
        )

    def test_same_seed_same_weights(self):
        train, val = toy_sets(32, seed=0)
        opt, cfg = self.fast_config()
        a = train_model(self.TINY, train, val, opt, cfg, seed=4)
        b = train_model(self.TINY, train, val, opt, cfg, seed=4)
        for x, y in zip(a.model.snapshot(), b.model.snapshot()):
            np.testing.assert_array_equal(x, y)
        assert [r.train_loss for r in a.epoch_log] == [r.train_loss for r in b.epoch_log]

    def test_best_epoch_is_first_maximum(self):
        train, val = toy_sets(32, seed=1)
        opt, cfg = self.fast_config(epochs=4)
        result = train_model(self.TINY, train, val, opt, cfg, seed=2)
        aucs = [r.validation_auc for r in result.epoch_log]
        assert len(aucs) == 4
        assert result.best_epoch == int(np.argmax(aucs)) + 1
        assert result.best_auc == max(aucs)
        assert result.model.best_epoch == result.best_epoch

    def test_restored_weights_are_float32(self):
        train, val = toy_sets(16, seed=2)
        opt, cfg = self.fast_config(epochs=1)
        result = train_model(self.TINY, train, val, opt, cfg, seed=0)
        for arr in result.model.snapshot():
            np.testing.assert_array_equal(arr, arr.astype(np.float32))

    def test_subject_provenance(self):
        train, val = toy_sets(16, seed=3)
        opt, cfg = self.fast_config(epochs=1)
        result = train_model(self.TINY, train, val, opt, cfg, seed=0)
        assert result.trained_on == frozenset({"toy"})
        assert result.validated_on == frozenset({"toy"})

    def test_single_class_validation(self):
        train, _ = toy_sets(16, seed=0)
        windows, _ = toy_windows(16, seed=5)
        val = [ValidationSubject("v", [windows], np.zeros(32, dtype=np.int8))]
        with pytest.raises(DataError):
            train_model(self.TINY, train, val, *self.fast_config())

    def test_validation_auc_pools_subjects(self):
        from seizure_cnn.arch import assemble

        _, val = toy_sets(16, seed=0)
        net = assemble(self.TINY, seed=0)
        post = PostProcessConfig()
        single = validation_auc(net, val, post, apply_postprocess=False)
        doubled = validation_auc(net, val + val, post, apply_postprocess=False)
        assert single == pytest.approx(doubled)

    @pytest.mark.slow
    def test_cnn11_overfits_small_balanced_set(self):
        train, val = toy_sets(128, seed=0)
        opt = OptimizerConfig(learning_rate=0.01, momentum=0.9, batch_size=32)
        cfg = TrainingConfig(epochs=40, max_train_fraction=1.0, validation_postprocess=False)
        result = train_model(build_cnn11(), train, val, opt, cfg, seed=0)
        assert max(r.train_accuracy for r in result.epoch_log) >= 0.95
        assert result.best_auc >= 95.0

"""Tests for ROC, AUC, AUC90 and false-detection metrics.

This test suite validates that:
1. AUC equals the pairwise concordance probability (ties count one half)
2. AUC90 is 100 for a perfect detector and 5 for chance
3. ROC curves run from (sens 1, spec 0) to (sens 0, spec 1)
4. FD/h counts false detection events, not seconds
5. Sensitivity at the FD/h limit picks the lowest admissible threshold
"""
import math

import numpy as np
import pytest

from seizure_cnn.errors import DataError
from seizure_cnn.evaluation.metrics import (
    DEFAULT_FD_THRESHOLDS,
    auc,
    auc90,
    epoch_sensitivity,
    false_detections,
    fd_per_hour,
    fd_table,
    roc,
    roc_frame,
    runs,
    sensitivity_at_fdh,
    write_roc,
)
from seizure_cnn.evaluation.postprocess import decisions

pytestmark = pytest.mark.unit


def pairwise_auc(scores, labels):
    pos, neg = scores[labels == 1], scores[labels == 0]
    greater = (pos[:, None] > neg[None, :]).mean()
    ties = (pos[:, None] == neg[None, :]).mean()
    return 100.0 * (greater + 0.5 * ties)


class TestAuc:
    @pytest.mark.parametrize("seed", range(5))
    def test_matches_pairwise_oracle(self, seed):
        rng = np.random.Generator(np.random.PCG64(seed))
        labels = (rng.uniform(size=400) < 0.2).astype(int)
        # rounding creates ties between classes
        scores = np.round(rng.uniform(size=400) + 0.3 * labels, 2)
        assert auc(roc(scores, labels)) == pytest.approx(pairwise_auc(scores, labels), abs=1e-9)

    def test_oracle_on_many_small_instances(self):
        rng = np.random.Generator(np.random.PCG64(2024))
        for _ in range(1000):
            n = int(rng.integers(2, 201))
            labels = (rng.uniform(size=n) < rng.uniform(0.1, 0.9)).astype(int)
            labels[:2] = [0, 1]
            # a coarse grid forces duplicated scores
            scores = rng.integers(0, int(rng.integers(2, 50)), size=n) / 10.0
            assert abs(auc(roc(scores, labels)) - pairwise_auc(scores, labels)) < 1e-10

    def test_perfect_detector(self):
        labels = np.r_[np.zeros(50), np.ones(10)].astype(int)
        curve = roc(labels * 0.8 + 0.1, labels)
        assert auc(curve) == pytest.approx(100.0)
        assert auc90(curve) == pytest.approx(100.0)

    def test_inverted_detector(self):
        labels = np.r_[np.zeros(50), np.ones(10)].astype(int)
        assert auc(roc(1 - labels, labels)) == pytest.approx(0.0)

    def test_constant_trace_is_chance(self):
        labels = np.r_[np.zeros(50), np.ones(10)].astype(int)
        curve = roc(np.full(60, 0.5), labels)
        assert auc(curve) == pytest.approx(50.0)
        assert auc90(curve) == pytest.approx(5.0)

    def test_auc90_bounds(self, rng):
        labels = (rng.uniform(size=500) < 0.3).astype(int)
        curve = roc(rng.uniform(size=500) + 0.5 * labels, labels)
        assert 0.0 <= auc90(curve) <= auc(curve) <= 100.0

    def test_single_class(self):
        with pytest.raises(DataError):
            roc(np.linspace(0, 1, 10), np.zeros(10, dtype=int))

    def test_length_mismatch(self):
        with pytest.raises(DataError):
            roc(np.zeros(5), np.array([0, 1, 0]))


class TestRocCurve:
    def test_endpoints(self):
        curve = roc(np.array([0.1, 0.4, 0.35, 0.8]), np.array([0, 0, 1, 1]))
        assert curve.thresholds[0] == -np.inf and curve.thresholds[-1] == np.inf
        assert (curve.sensitivity[0], curve.specificity[0]) == (1.0, 0.0)
        assert (curve.sensitivity[-1], curve.specificity[-1]) == (0.0, 1.0)
        assert (np.diff(curve.thresholds) > 0).all()

    def test_csv(self, tmp_path):
        curve = roc(np.array([0.1, 0.4, 0.35, 0.8]), np.array([0, 0, 1, 1]))
        path = write_roc(curve, tmp_path / "roc.csv")
        assert path.read_text().splitlines()[0] == "threshold,sensitivity,specificity"
        assert len(roc_frame(curve)) == len(curve)

    def test_decisions_share_the_roc_threshold_convention(self, rng):
        labels = (rng.uniform(size=400) < 0.3).astype(int)
        trace = np.round(rng.uniform(size=400), 1)
        curve = roc(trace, labels)
        for thr, sens, spec in zip(curve.thresholds[1:-1], curve.sensitivity[1:-1], curve.specificity[1:-1]):
            d = decisions(trace, thr, collar_s=0).astype(bool)
            assert d[labels == 1].mean() == pytest.approx(sens)
            assert 1.0 - d[labels == 0].mean() == pytest.approx(spec)


class TestFalseDetections:
    def test_runs(self):
        assert runs([0, 1, 1, 0, 1]) == [(1, 3), (4, 5)]
        assert runs([0, 0]) == []

    def test_events_not_seconds(self):
        labels = np.zeros(3600, dtype=int)
        labels[100:200] = 1
        d = np.zeros(3600, dtype=int)
        d[150:250] = 1      # touches the seizure: not false
        d[1000:1100] = 1    # false, 100 s long
        d[2000:2001] = 1    # false, 1 s long
        assert false_detections(d, labels) == 2
        assert fd_per_hour(d, labels) == pytest.approx(2.0)

    def test_rate_scales_with_duration(self):
        labels = np.zeros(7200, dtype=int)
        d = np.zeros(7200, dtype=int)
        d[10] = 1
        assert fd_per_hour(d, labels) == pytest.approx(0.5)

    def test_epoch_sensitivity(self):
        labels = np.array([0, 1, 1, 1, 1])
        assert epoch_sensitivity([0, 1, 0, 1, 0], labels) == pytest.approx(50.0)


class TestFdTable:
    def test_default_thresholds(self):
        assert DEFAULT_FD_THRESHOLDS == (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)

    def test_rows(self):
        labels = np.zeros(3600, dtype=int)
        labels[1000:1100] = 1
        trace = np.where(labels == 1, 0.95, 0.05)
        table = fd_table(trace, labels, collar_s=30)
        assert [r.threshold for r in table] == list(DEFAULT_FD_THRESHOLDS)
        assert all(r.fd_per_hour == 0.0 and r.sensitivity == 100.0 for r in table)


class TestSensitivityAtFdh:
    def setup_method(self):
        self.labels = np.zeros(7200, dtype=int)
        self.labels[1000:1100] = 1
        self.trace = np.zeros(7200)
        self.trace[1000:1100] = 0.9
        self.trace[3000:3010] = 0.95

    def test_strict_limit_drops_to_zero_sensitivity(self):
        # the 0.95 burst is a false detection at every threshold above the floor
        result = sensitivity_at_fdh(self.trace, self.labels, max_fdh=0.25, collar_s=0)
        assert not result.satisfied
        assert result.sensitivity == 0.0
        assert math.isnan(result.threshold)

    def test_looser_limit_reaches_full_sensitivity(self):
        result = sensitivity_at_fdh(self.trace, self.labels, max_fdh=0.5, collar_s=0)
        assert result.satisfied
        assert result.sensitivity == 100.0
        assert result.threshold == pytest.approx(0.9)
        assert result.fd_per_hour == pytest.approx(0.5)

    def test_threshold_equal_to_score_detects_it(self):
        result = sensitivity_at_fdh(self.trace, self.labels, max_fdh=0.5, collar_s=0, thresholds=[0.9])
        assert result.sensitivity == 100.0

    def test_floor_value_never_floods_the_record(self):
        result = sensitivity_at_fdh(np.where(self.labels == 1, 0.9, 0.1), self.labels, collar_s=0)
        assert result.threshold == pytest.approx(0.9)
        assert result.fd_per_hour == 0.0

    def test_explicit_thresholds(self):
        result = sensitivity_at_fdh(self.trace, self.labels, max_fdh=0.25, collar_s=0, thresholds=[0.5, 0.8, 0.96, 0.99])
        assert result.threshold == pytest.approx(0.96)

    def test_unreachable_limit(self):
        result = sensitivity_at_fdh(self.trace, self.labels, max_fdh=0.25, collar_s=0, thresholds=[0.5, 0.8])
        assert not result.satisfied
        assert result.sensitivity == 0.0

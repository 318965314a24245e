"""Tests for the leave-one-subject-out harness.

This test suite validates that:
1. Every subject is held out exactly once, with a seed tied to its id
2. A model that touched its test subject is refused
3. Reports come back in subject order, serial or threaded
4. A fold's outcome does not depend on the order subjects are listed in
"""
from dataclasses import dataclass

import pytest

from seizure_cnn.errors import DataError, LeakageError
from seizure_cnn.evaluation.loo import FoldPlan, FoldReport, check_leakage, loo_harness, plan_folds

pytestmark = pytest.mark.unit

IDS = ["s01", "s02", "s03", "s04", "s05"]


@dataclass
class FakeSubject:
    subject_id: str


@dataclass
class FakeModel:
    trained_on: frozenset
    validated_on: frozenset = frozenset()
    seed: int = 0


def honest_trainer(train, seed):
    return FakeModel(trained_on=frozenset(s.subject_id for s in train), seed=seed)


def seeded_evaluator(model, subject, plan):
    score = float(model.seed % 10_000) / 100.0
    return FoldReport(test_subject=subject.subject_id, auc=score, auc90=score / 2, sensitivity_at_fdh=0.0, fd_table=[])


class TestPlanFolds:
    def test_one_fold_per_subject(self):
        plans = plan_folds(IDS, master_seed=3)
        assert [p.test_subject for p in plans] == IDS
        for p in plans:
            assert p.test_subject not in p.train_subjects
            assert len(p.train_subjects) == len(IDS) - 1

    def test_seed_depends_on_id_not_position(self):
        forward = {p.test_subject: p.seed for p in plan_folds(IDS, 3)}
        backward = {p.test_subject: p.seed for p in plan_folds(IDS[::-1], 3)}
        assert forward == backward
        assert len(set(forward.values())) == len(IDS)

    def test_master_seed_changes_fold_seeds(self):
        assert plan_folds(IDS, 1)[0].seed != plan_folds(IDS, 2)[0].seed

    def test_needs_two_subjects(self):
        with pytest.raises(DataError):
            plan_folds(["only"], 0)

    def test_duplicate_ids(self):
        with pytest.raises(DataError):
            plan_folds(["a", "b", "a"], 0)


class TestCheckLeakage:
    PLAN = FoldPlan(test_subject="s01", train_subjects=("s02", "s03"), seed=0)

    def test_clean_model_passes(self):
        check_leakage(self.PLAN, FakeModel(frozenset({"s02"}), frozenset({"s03"})))

    def test_trained_on_test_subject(self):
        with pytest.raises(LeakageError) as exc:
            check_leakage(self.PLAN, FakeModel(frozenset({"s01", "s02"})))
        assert exc.value.exit_code == 3

    def test_validated_on_test_subject(self):
        with pytest.raises(LeakageError):
            check_leakage(self.PLAN, FakeModel(frozenset({"s02"}), frozenset({"s01"})))

    def test_subject_outside_fold(self):
        with pytest.raises(LeakageError):
            check_leakage(self.PLAN, FakeModel(frozenset({"s02", "s09"})))


class TestLooHarness:
    def subjects(self, ids=IDS):
        return [FakeSubject(i) for i in ids]

    def test_reports_in_subject_order(self):
        reports = loo_harness(self.subjects(), honest_trainer, seeded_evaluator, master_seed=0)
        assert [r.test_subject for r in reports] == IDS

    def test_trainer_never_sees_test_subject(self):
        seen = []

        def trainer(train, seed):
            seen.append({s.subject_id for s in train})
            return honest_trainer(train, seed)

        loo_harness(self.subjects(), trainer, seeded_evaluator)
        assert all(len(ids) == len(IDS) - 1 for ids in seen)
        assert {sid for sid in IDS for ids in seen if sid not in ids} == set(IDS)

    def test_leaky_trainer_refused(self):
        def leaky(train, seed):
            return FakeModel(trained_on=frozenset(IDS))

        with pytest.raises(LeakageError):
            loo_harness(self.subjects(), leaky, seeded_evaluator)

    def test_threads_match_serial(self):
        serial = loo_harness(self.subjects(), honest_trainer, seeded_evaluator, master_seed=5)
        threaded = loo_harness(self.subjects(), honest_trainer, seeded_evaluator, master_seed=5, max_workers=3)
        assert [(r.test_subject, r.auc) for r in serial] == [(r.test_subject, r.auc) for r in threaded]

    def test_subject_order_does_not_change_fold_results(self):
        a = loo_harness(self.subjects(), honest_trainer, seeded_evaluator, master_seed=5)
        b = loo_harness(self.subjects(IDS[::-1]), honest_trainer, seeded_evaluator, master_seed=5)
        assert {r.test_subject: r.auc for r in a} == {r.test_subject: r.auc for r in b}


class TestFoldReport:
    def test_auc_out_of_range(self):
        with pytest.raises(DataError):
            FoldReport(test_subject="x", auc=101.0, auc90=0.0, sensitivity_at_fdh=0.0, fd_table=[])

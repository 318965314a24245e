"""Leave-one-subject-out harness.

Each subject is held out once. The trainer sees only the remaining subjects
and must report which subjects its model was trained and validated on; the
harness refuses to evaluate a model that touched its own test subject.
"""
from __future__ import annotations

import contextvars
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Protocol, Sequence, TypeVar

import numpy as np

from ..errors import DataError, LeakageError
from ..logging import logger
from ..provenance import derive_seed
from ..telemetry import FOLD_SECONDS, FOLDS
from .metrics import FdRow


class HasSubjectId(Protocol):
    subject_id: str


class FoldModelLike(Protocol):
    trained_on: frozenset[str]
    validated_on: frozenset[str]


S = TypeVar("S", bound=HasSubjectId)
M = TypeVar("M", bound=FoldModelLike)


@dataclass(frozen=True)
class FoldPlan:
    test_subject: str
    train_subjects: tuple[str, ...]
    seed: int


@dataclass
class FoldReport:
    test_subject: str
    auc: float
    auc90: float
    sensitivity_at_fdh: float
    fd_table: list[FdRow]
    best_epoch: Optional[int] = None
    fdh_satisfied: Optional[bool] = None
    comparisons: dict[str, tuple[float, float]] = field(default_factory=dict)
    traces: dict[str, np.ndarray] = field(default_factory=dict, repr=False)
    labels: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        for name, value in (("auc", self.auc), ("auc90", self.auc90)):
            if not 0.0 <= value <= 100.0 + 1e-9:
                raise DataError(f"{name} {value} outside [0, 100]", details={"subject": self.test_subject})


def plan_folds(subject_ids: Sequence[str], master_seed: int) -> list[FoldPlan]:
    """One fold per subject; the fold seed depends only on the master seed and test id.

    Raises:
        DataError: fewer than two subjects or duplicate ids
    """
    ids = list(subject_ids)
    if len(ids) < 2:
        raise DataError(f"leave-one-subject-out needs at least 2 subjects, got {len(ids)}")
    if len(set(ids)) != len(ids):
        raise DataError("subject ids must be unique", details={"subjects": ids})
    return [
        FoldPlan(
            test_subject=sid,
            train_subjects=tuple(s for s in ids if s != sid),
            seed=derive_seed(master_seed, "fold", sid),
        )
        for sid in ids
    ]


def check_leakage(plan: FoldPlan, model: FoldModelLike) -> None:
    touched = set(model.trained_on) | set(model.validated_on)
    if plan.test_subject in touched:
        raise LeakageError(
            f"fold for {plan.test_subject} trained or validated on its own test subject",
            details={"test_subject": plan.test_subject, "trained_on": sorted(model.trained_on)},
        )
    strangers = touched - set(plan.train_subjects)
    if strangers:
        raise LeakageError(
            f"fold for {plan.test_subject} used subjects outside its training set",
            details={"unexpected": sorted(strangers)},
        )


def loo_harness(
    subjects: Sequence[S],
    trainer: Callable[[list[S], int], M],
    evaluator: Callable[[M, S, FoldPlan], FoldReport],
    master_seed: int = 0,
    max_workers: int = 1,
) -> list[FoldReport]:
    """Run every fold and return the reports in subject order.

    Folds are independent; with ``max_workers > 1`` they run on a thread pool.
    """
    by_id = {s.subject_id: s for s in subjects}
    plans = plan_folds([s.subject_id for s in subjects], master_seed)

    def run(plan: FoldPlan) -> FoldReport:
        started = time.perf_counter()
        logger.info("fold %s: training on %d subjects", plan.test_subject, len(plan.train_subjects))
        model = trainer([by_id[sid] for sid in plan.train_subjects], plan.seed)
        check_leakage(plan, model)
        report = evaluator(model, by_id[plan.test_subject], plan)
        FOLDS.inc()
        FOLD_SECONDS.observe(time.perf_counter() - started)
        logger.info("fold %s: auc=%.2f auc90=%.2f", plan.test_subject, report.auc, report.auc90)
        return report

    if max_workers <= 1:
        return [run(p) for p in plans]
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        futures = [pool.submit(contextvars.copy_context().run, run, p) for p in plans]
        return [f.result() for f in futures]

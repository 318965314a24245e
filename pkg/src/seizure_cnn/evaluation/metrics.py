"""Epoch-based (per-second) detection metrics.

ROC points come from scikit-learn's ``roc_curve`` with every distinct score
kept as a threshold. Curves are stored in ascending threshold order, from
-inf (everything called seizure: sensitivity 1, specificity 0) to +inf
(nothing called seizure: sensitivity 0, specificity 1). A second counts as
positive when its score is >= the threshold.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np
import pandas as pd
from sklearn.metrics import auc as trapezoid_area
from sklearn.metrics import roc_curve

from ..errors import DataError, writing
from .postprocess import decisions as make_decisions

SECONDS_PER_HOUR = 3600.0
DEFAULT_FD_THRESHOLDS = tuple(round(0.1 * i, 1) for i in range(1, 10))


@dataclass(frozen=True)
class RocCurve:
    thresholds: np.ndarray
    fpr: np.ndarray
    tpr: np.ndarray

    @property
    def sensitivity(self) -> np.ndarray:
        return self.tpr

    @property
    def specificity(self) -> np.ndarray:
        return 1.0 - self.fpr

    def __len__(self) -> int:
        return self.thresholds.shape[0]


def _binary_labels(labels) -> np.ndarray:
    y = np.asarray(labels)
    if y.ndim != 1 or y.shape[0] == 0:
        raise DataError(f"expected non-empty 1-D labels, got shape {y.shape}")
    if not np.isin(y, (0, 1)).all():
        raise DataError("labels must be 0 or 1")
    return y.astype(np.int8)


def _require_both_classes(y: np.ndarray) -> None:
    if y.min() == y.max():
        raise DataError(
            "labels hold a single class; ROC metrics need seizure and non-seizure seconds",
            details={"n": int(y.shape[0]), "class": int(y[0])},
        )


def roc(trace, labels) -> RocCurve:
    """ROC over every distinct score, bracketed by the -inf and +inf thresholds.

    Raises:
        DataError: length mismatch or single-class labels
    """
    scores = np.asarray(trace, dtype=np.float64)
    y = _binary_labels(labels)
    if scores.shape != y.shape:
        raise DataError(f"trace length {scores.shape[0]} differs from label length {y.shape[0]}")
    _require_both_classes(y)
    fpr, tpr, thr = roc_curve(y, scores, drop_intermediate=False)
    # roc_curve sweeps thresholds downward starting at +inf
    return RocCurve(
        thresholds=np.concatenate([[-np.inf], thr[:0:-1], [np.inf]]),
        fpr=np.concatenate([[1.0], fpr[:0:-1], [0.0]]),
        tpr=np.concatenate([[1.0], tpr[:0:-1], [0.0]]),
    )


def auc(curve: RocCurve) -> float:
    """Trapezoidal area under sensitivity vs (1 - specificity), in percent."""
    return 100.0 * float(trapezoid_area(curve.fpr, curve.tpr))


def auc90(curve: RocCurve, max_fpr: float = 0.1) -> float:
    """Area over specificity in [1 - max_fpr, 1], rescaled so a perfect detector scores 100.

    The curve is interpolated linearly where it crosses the specificity limit.
    """
    f, t = curve.fpr[::-1], curve.tpr[::-1]
    stop = int(np.searchsorted(f, max_fpr, side="right"))
    xs, ys = f[:stop], t[:stop]
    if xs[-1] < max_fpr:
        x0, y0, x1, y1 = f[stop - 1], t[stop - 1], f[stop], t[stop]
        ys = np.append(ys, y0 + (y1 - y0) * (max_fpr - x0) / (x1 - x0))
        xs = np.append(xs, max_fpr)
    return 100.0 * float(trapezoid_area(xs / max_fpr, ys))


def roc_frame(curve: RocCurve) -> pd.DataFrame:
    return pd.DataFrame({
        "threshold": curve.thresholds,
        "sensitivity": curve.sensitivity,
        "specificity": curve.specificity,
    })


def write_roc(curve: RocCurve, path: Path) -> Path:
    path = Path(path)
    with writing(path):
        path.parent.mkdir(parents=True, exist_ok=True)
        roc_frame(curve).to_csv(path, index=False, lineterminator="\n")
    return path


def runs(binary) -> list[tuple[int, int]]:
    """Maximal runs of ones as half-open (start, end) index pairs."""
    b = np.asarray(binary).astype(np.int8)
    edges = np.diff(np.concatenate([[0], b, [0]]))
    return list(zip(np.flatnonzero(edges == 1).tolist(), np.flatnonzero(edges == -1).tolist()))


def false_detections(decisions, labels) -> int:
    y = _binary_labels(labels)
    return sum(1 for start, end in runs(decisions) if not y[start:end].any())


def fd_per_hour(decisions, labels) -> float:
    """False-detection events per hour of record.

    A false detection is a maximal run of positive decisions that touches no
    labelled seizure second.
    """
    d = np.asarray(decisions)
    y = _binary_labels(labels)
    if d.shape != y.shape:
        raise DataError(f"decision length {d.shape} differs from label length {y.shape}")
    return false_detections(d, y) / (y.shape[0] / SECONDS_PER_HOUR)


def epoch_sensitivity(decisions, labels) -> float:
    y = _binary_labels(labels).astype(bool)
    if not y.any():
        return 0.0
    return 100.0 * float(np.asarray(decisions)[y].mean())


@dataclass(frozen=True)
class FdRow:
    threshold: float
    fd_per_hour: float
    sensitivity: float


def fd_table(trace, labels, thresholds: Iterable[float] = DEFAULT_FD_THRESHOLDS, collar_s: int = 30) -> list[FdRow]:
    """FD/h and epoch sensitivity of the collared decisions at each threshold."""
    rows = []
    for thr in thresholds:
        d = make_decisions(trace, thr, collar_s)
        rows.append(FdRow(float(thr), fd_per_hour(d, labels), epoch_sensitivity(d, labels)))
    return rows


@dataclass(frozen=True)
class SensitivityResult:
    sensitivity: float
    threshold: float
    fd_per_hour: float
    satisfied: bool


def sensitivity_at_fdh(
    trace,
    labels,
    max_fdh: float = 0.25,
    collar_s: int = 30,
    thresholds: Optional[Sequence[float]] = None,
) -> SensitivityResult:
    """Sensitivity at the lowest threshold whose decisions stay within ``max_fdh``.

    Thresholds default to every distinct trace value above the minimum, swept
    downward; the minimum itself would mark every second and is skipped.
    When no threshold meets the limit the result has sensitivity 0 and
    ``satisfied=False``.

    Raises:
        DataError: single-class labels
    """
    y = _binary_labels(labels)
    _require_both_classes(y)
    x = np.asarray(trace, dtype=np.float64)
    sweep = np.unique(x)[:0:-1] if thresholds is None else np.sort(np.asarray(thresholds, dtype=np.float64))[::-1]
    best: Optional[SensitivityResult] = None
    for thr in sweep:
        d = make_decisions(x, thr, collar_s)
        rate = fd_per_hour(d, y)
        if rate <= max_fdh:
            best = SensitivityResult(epoch_sensitivity(d, y), float(thr), rate, True)
    if best is None:
        return SensitivityResult(0.0, math.nan, math.nan, False)
    return best

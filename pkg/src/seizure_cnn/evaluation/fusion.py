"""Weighted combination of two classifiers' per-second probabilities.

arithmetic: alpha * p_cnn + (1 - alpha) * p_svm
geometric:  p_cnn ** alpha * p_svm ** (1 - alpha), inputs floored at 1e-12

Fusion happens before post-processing. alpha = 1 returns the CNN trace and
alpha = 0 the baseline trace unchanged, in both modes.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..config import FusionConfig, PostProcessConfig
from ..errors import ConfigurationError, DataError
from .metrics import auc, auc90, roc
from .postprocess import postprocess
from .stats import mean_ci

GEOMETRIC_FLOOR = 1e-12


def fuse(p_cnn, p_svm, cfg: FusionConfig = FusionConfig()) -> np.ndarray:
    a = np.asarray(p_cnn, dtype=np.float64)
    b = np.asarray(p_svm, dtype=np.float64)
    if a.shape != b.shape:
        raise DataError(f"fusion inputs differ in shape: {a.shape} vs {b.shape}")
    alpha = cfg.alpha
    if not 0.0 <= alpha <= 1.0:
        raise ConfigurationError(f"alpha {alpha} outside [0, 1]")
    if alpha == 1.0:
        return a.copy()
    if alpha == 0.0:
        return b.copy()
    if cfg.mode == "arithmetic":
        return alpha * a + (1.0 - alpha) * b
    return np.maximum(a, GEOMETRIC_FLOOR) ** alpha * np.maximum(b, GEOMETRIC_FLOOR) ** (1.0 - alpha)


@dataclass(frozen=True)
class SubjectTraces:
    """Raw (not post-processed) channel-fused traces of one subject."""
    subject_id: str
    cnn: np.ndarray
    svm: np.ndarray
    labels: np.ndarray


@dataclass(frozen=True)
class SweepRow:
    alpha: float
    mode: str
    auc_mean: float
    auc_ci: float
    auc90_mean: float
    auc90_ci: float


def score_subject(trace: np.ndarray, labels: np.ndarray, post: PostProcessConfig) -> tuple[float, float]:
    curve = roc(postprocess(trace, post), labels)
    return auc(curve), auc90(curve)


def alpha_sweep(
    subjects: Sequence[SubjectTraces],
    grid: Sequence[float],
    post: PostProcessConfig = PostProcessConfig(),
    modes: Sequence[str] = ("arithmetic", "geometric"),
) -> list[SweepRow]:
    """Mean and CI of AUC / AUC90 across subjects for every (alpha, mode)."""
    rows = []
    for mode in modes:
        for alpha in grid:
            cfg = FusionConfig(alpha=alpha, mode=mode)
            scores = [score_subject(fuse(s.cnn, s.svm, cfg), s.labels, post) for s in subjects]
            auc_mean, auc_ci = mean_ci([a for a, _ in scores])
            auc90_mean, auc90_ci = mean_ci([a for _, a in scores])
            rows.append(SweepRow(float(alpha), mode, auc_mean, auc_ci, auc90_mean, auc90_ci))
    return rows


def best_alpha(rows: Sequence[SweepRow], metric: str = "auc", mode: str = "arithmetic") -> SweepRow:
    """Row with the highest mean ``metric`` for ``mode``; ties go to the smaller alpha."""
    candidates = [r for r in rows if r.mode == mode]
    if not candidates:
        raise DataError(f"no sweep rows for mode {mode!r}")
    key = f"{metric}_mean"
    return max(sorted(candidates, key=lambda r: r.alpha), key=lambda r: getattr(r, key))

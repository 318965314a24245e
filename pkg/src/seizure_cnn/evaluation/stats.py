from __future__ import annotations

from typing import Mapping, Sequence

import numpy as np
from scipy import stats

from ..errors import DataError

Z_95 = 1.96


def mean_ci(values: Sequence[float]) -> tuple[float, float]:
    """Mean and 95% half-width 1.96 * s / sqrt(n), s with n - 1 degrees of freedom.

    Raises:
        DataError: fewer than two values
    """
    x = np.asarray(values, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] < 2:
        raise DataError(f"mean_ci needs at least 2 values, got {x.size}")
    return float(x.mean()), float(Z_95 * stats.sem(x, ddof=1))


def count_winners(table: Mapping[str, Sequence[float]]) -> dict[str, int]:
    """Subjects on which each classifier has the strictly highest score.

    ``table`` maps classifier name to per-subject scores, all in the same
    subject order. Tied maxima credit nobody.
    """
    names = list(table)
    if not names:
        return {}
    scores = np.vstack([np.asarray(table[n], dtype=np.float64) for n in names])
    wins = {n: 0 for n in names}
    for column in scores.T:
        top = np.flatnonzero(column == column.max())
        if top.shape[0] == 1:
            wins[names[top[0]]] += 1
    return wins

"""Per-second probability post-processing.

Chain: channel fusion -> moving average -> background adaptation, then a
threshold and a collar turn the trace into decisions. Every stage keeps
values inside [0, 1].
"""
from __future__ import annotations

from typing import Sequence

import numpy as np
from scipy import ndimage

from ..config import PostProcessConfig
from ..errors import DataError

BACKGROUND_FLOOR = 1e-3


def _as_trace(trace) -> np.ndarray:
    x = np.asarray(trace, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] == 0:
        raise DataError(f"expected a non-empty 1-D trace, got shape {x.shape}")
    return x


def _window_means(x: np.ndarray, before: int, after: int) -> np.ndarray:
    """Mean of x[t - before : t + after + 1] clipped to the trace."""
    n = x.shape[0]
    csum = np.concatenate([[0.0], np.cumsum(x)])
    idx = np.arange(n)
    lo = np.clip(idx - before, 0, n)
    hi = np.clip(idx + after + 1, 0, n)
    means = (csum[hi] - csum[lo]) / (hi - lo)
    return np.clip(means, x.min(), x.max())


def moving_average(trace, window_s: int = 60) -> np.ndarray:
    """Centred mean over ``window_s`` seconds, shrinking at the edges.

    Second t averages [t - (w-1)//2, t + w//2] intersected with the trace.
    """
    if window_s < 1:
        raise DataError(f"moving average window must be >= 1 s, got {window_s}")
    x = _as_trace(trace)
    return _window_means(x, (window_s - 1) // 2, window_s // 2)


def background_level(trace, window_s: int = 600) -> np.ndarray:
    """Trailing mean over the last ``window_s`` seconds (current included), floored at 1e-3."""
    x = _as_trace(trace)
    return np.maximum(_window_means(x, window_s - 1, 0), BACKGROUND_FLOOR)


def normalize_to_background(trace, background, beta: float = 1.0) -> np.ndarray:
    """p / (p + beta * bg); background values are floored at 1e-3."""
    x = _as_trace(trace)
    bg = np.maximum(np.broadcast_to(np.asarray(background, dtype=np.float64), x.shape), BACKGROUND_FLOOR)
    return x / (x + beta * bg)


def adapt_background(trace, bg_window_s: int = 600, beta: float = 1.0) -> np.ndarray:
    """Normalise each second against the trailing background level of the trace itself."""
    if bg_window_s < 60:
        raise DataError(f"background window must be >= 60 s, got {bg_window_s}")
    x = _as_trace(trace)
    return normalize_to_background(x, background_level(x, bg_window_s), beta)


def postprocess(trace, cfg: PostProcessConfig = PostProcessConfig()) -> np.ndarray:
    smoothed = moving_average(trace, cfg.smoothing_window_s)
    if cfg.adapt_background:
        return adapt_background(smoothed, cfg.background_window_s, cfg.background_beta)
    return smoothed


def apply_collar(decisions, collar_s: int = 30) -> np.ndarray:
    """Extend every run of ones by ``collar_s`` seconds on each side."""
    d = np.asarray(decisions).astype(bool)
    if collar_s <= 0 or not d.any():
        return d.astype(np.int8)
    grown = ndimage.binary_dilation(d, structure=np.ones(2 * collar_s + 1, dtype=bool))
    return grown.astype(np.int8)


def decisions(trace, threshold: float, collar_s: int = 30) -> np.ndarray:
    """Seconds where the trace reaches ``threshold``, widened by the collar.

    The comparison is ``>=``, the same convention the ROC sweep uses.
    """
    return apply_collar(_as_trace(trace) >= threshold, collar_s)


def channel_fuse(traces: Sequence[np.ndarray], mode: str = "max") -> np.ndarray:
    """Combine per-channel traces second by second (max or mean)."""
    if len(traces) == 0:
        raise DataError("no channel traces to fuse")
    lengths = {np.asarray(t).shape[0] for t in traces}
    if len(lengths) != 1:
        raise DataError(f"channel traces differ in length: {sorted(lengths)}")
    stacked = np.vstack([np.asarray(t, dtype=np.float64) for t in traces])
    if mode == "max":
        return stacked.max(axis=0)
    if mode == "mean":
        return stacked.mean(axis=0)
    raise DataError(f"unknown channel fusion mode {mode!r}")

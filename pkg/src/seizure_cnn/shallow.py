"""Feature-based baseline: eight window features and L2 logistic regression.

Features per 8 s window at 32 Hz (the last four from the one-sided power
spectrum with the DC bin dropped):

    rms               root mean square amplitude
    line_length       sum of absolute first differences
    zero_crossings    sign changes between consecutive samples
    hjorth_mobility   sqrt(var(x') / var(x))
    hjorth_complexity mobility(x') / mobility(x)
    sef80             spectral edge frequency below which 80% of power lies
    band_ratio_1_4    share of power in [1, 4] Hz
    spectral_entropy  Shannon entropy of the normalized spectrum / log(bins)

Degenerate windows (zero variance or zero power) map the affected features
to 0 instead of dividing by zero.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import entr, expit

from .config import BaselineConfig
from .errors import DataError, NumericError, ShapeError
from .logging import logger

FEATURE_NAMES = (
    "rms",
    "line_length",
    "zero_crossings",
    "hjorth_mobility",
    "hjorth_complexity",
    "sef80",
    "band_ratio_1_4",
    "spectral_entropy",
)

PROB_CLIP = 1e-12


def _safe_ratio(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    out = np.zeros_like(num, dtype=np.float64)
    np.divide(num, den, out=out, where=den > 0)
    return out


def feature_matrix(windows: np.ndarray, fs: float = 32.0) -> np.ndarray:
    """Features for every row of an (n_windows, length) array."""
    w = np.asarray(windows, dtype=np.float64)
    if w.ndim != 2 or w.shape[1] < 3:
        raise ShapeError(f"expected (n_windows, length >= 3) windows, got {w.shape}")
    d1 = np.diff(w, axis=1)
    d2 = np.diff(d1, axis=1)
    var0, var1, var2 = w.var(axis=1), d1.var(axis=1), d2.var(axis=1)
    mobility = np.sqrt(_safe_ratio(var1, var0))
    complexity = _safe_ratio(np.sqrt(_safe_ratio(var2, var1)), mobility)

    power = np.abs(np.fft.rfft(w, axis=1)) ** 2
    freqs = np.fft.rfftfreq(w.shape[1], d=1.0 / fs)
    power, freqs = power[:, 1:], freqs[1:]
    total = power.sum(axis=1)
    q = power / np.where(total > 0, total, 1.0)[:, None]
    edge_idx = np.argmax(np.cumsum(q, axis=1) >= 0.8, axis=1)
    sef80 = np.where(total > 0, freqs[edge_idx], 0.0)
    in_band = (freqs >= 1.0) & (freqs <= 4.0)
    band_ratio = _safe_ratio(power[:, in_band].sum(axis=1), total)
    entropy = np.where(total > 0, entr(q).sum(axis=1) / np.log(freqs.shape[0]), 0.0)

    return np.column_stack([
        np.sqrt(np.mean(w ** 2, axis=1)),
        np.abs(d1).sum(axis=1),
        (w[:, :-1] * w[:, 1:] < 0).sum(axis=1).astype(np.float64),
        mobility,
        complexity,
        sef80,
        band_ratio,
        entropy,
    ])


def extract_features(window: np.ndarray, fs: float = 32.0) -> np.ndarray:
    return feature_matrix(np.asarray(window)[None, :], fs)[0]


@dataclass
class BaselineModel:
    mean: np.ndarray
    scale: np.ndarray
    weights: np.ndarray
    bias: float
    l2: float
    feature_names: tuple[str, ...] = FEATURE_NAMES
    loss_history: list[float] = field(default_factory=list, repr=False)

    def predict_features(self, features: np.ndarray) -> np.ndarray:
        features = np.asarray(features, dtype=np.float64)
        if features.ndim != 2 or features.shape[1] != self.weights.shape[0]:
            raise ShapeError(
                f"expected (n, {self.weights.shape[0]}) features, got {features.shape}"
            )
        z = ((features - self.mean) / self.scale) @ self.weights + self.bias
        return np.clip(expit(z), PROB_CLIP, 1.0 - PROB_CLIP)

    def predict_proba(self, windows: np.ndarray, fs: float = 32.0) -> np.ndarray:
        return self.predict_features(feature_matrix(windows, fs))


def baseline_probability(model: BaselineModel, window: np.ndarray, fs: float = 32.0) -> float:
    """Seizure probability for a single window, strictly inside (0, 1)."""
    return float(model.predict_proba(np.asarray(window)[None, :], fs)[0])


def logistic_loss_and_grad(theta: np.ndarray, xs: np.ndarray, y: np.ndarray, l2: float) -> tuple[float, np.ndarray]:
    """Mean log-loss plus (l2 / 2)*||w||^2; the bias (last entry) is not penalised."""
    w, b = theta[:-1], theta[-1]
    z = xs @ w + b
    loss = float(np.mean(np.logaddexp(0.0, z) - y * z) + 0.5 * l2 * (w @ w))
    r = (expit(z) - y) / y.shape[0]
    grad = np.empty_like(theta)
    grad[:-1] = xs.T @ r + l2 * w
    grad[-1] = r.sum()
    return loss, grad


def train_baseline(features: np.ndarray, labels: np.ndarray, cfg: BaselineConfig = BaselineConfig()) -> BaselineModel:
    """Fit standardized L2 logistic regression by full-batch gradient descent.

    The step is 1 / L with L = lambda_max(X'X / n) / 4 + l2, which makes the
    regularized loss non-increasing. Iteration stops after ``max_iter`` steps
    or once the loss decreases by at most ``tol`` relative to its value.

    Raises:
        DataError: empty input or a single class
        NumericError: the loss becomes non-finite
    """
    x = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] == 0 or y.shape != (x.shape[0],):
        raise DataError(f"need (n, d) features with n matching labels, got {x.shape} and {y.shape}")
    if np.unique(y).size < 2:
        raise DataError("baseline training needs both seizure and non-seizure windows")
    mean = x.mean(axis=0)
    scale = x.std(axis=0)
    scale[scale == 0] = 1.0
    mean, scale = mean.astype(np.float32).astype(np.float64), scale.astype(np.float32).astype(np.float64)
    xs = (x - mean) / scale
    design = np.column_stack([xs, np.ones(xs.shape[0])])
    lipschitz = 0.25 * np.linalg.eigvalsh(design.T @ design / xs.shape[0]).max() + cfg.l2
    step = 1.0 / lipschitz

    theta = np.zeros(xs.shape[1] + 1)
    loss, grad = logistic_loss_and_grad(theta, xs, y, cfg.l2)
    history = [loss]
    for _ in range(cfg.max_iter):
        theta = theta - step * grad
        new_loss, grad = logistic_loss_and_grad(theta, xs, y, cfg.l2)
        history.append(new_loss)
        if not np.isfinite(new_loss):
            raise NumericError("baseline loss became non-finite", details={"iteration": len(history) - 1})
        done = loss - new_loss <= cfg.tol * max(1.0, abs(loss))
        loss = new_loss
        if done:
            break
    logger.info("baseline fit: %d iterations, final loss %.6f", len(history) - 1, loss)
    theta = theta.astype(np.float32).astype(np.float64)
    return BaselineModel(
        mean=mean,
        scale=scale,
        weights=theta[:-1],
        bias=float(theta[-1]),
        l2=cfg.l2,
        feature_names=FEATURE_NAMES if xs.shape[1] == len(FEATURE_NAMES) else tuple(f"f{i}" for i in range(xs.shape[1])),
        loss_history=history,
    )

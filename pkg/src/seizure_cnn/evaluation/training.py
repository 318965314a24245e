"""CNN training loop with per-epoch validation and best-snapshot selection."""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..arch import NetworkSpec, assemble
from ..config import OptimizerConfig, PostProcessConfig, TrainingConfig
from ..errors import DataError, NumericError
from ..logging import logger
from ..nncore.losses import softmax_cross_entropy
from ..nncore.network import Network
from ..nncore.optim import SgdMomentum
from ..telemetry import BEST_VALIDATION_AUC, EPOCH_SECONDS, EPOCHS, WINDOWS_SCORED
from .metrics import auc, roc
from .postprocess import channel_fuse, postprocess

INFERENCE_BATCH = 512


@dataclass
class WindowSet:
    """Pool of labelled windows, ``windows`` shaped (n, length)."""
    windows: np.ndarray
    labels: np.ndarray
    subjects: np.ndarray

    def __len__(self) -> int:
        return self.windows.shape[0]


@dataclass
class ValidationSubject:
    """Whole-recording windows of one subject: one (n_windows, length) array per channel."""
    subject_id: str
    channels: list[np.ndarray]
    labels: np.ndarray

    @property
    def n_windows(self) -> int:
        return sum(ch.shape[0] for ch in self.channels)


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    train_loss: float
    train_accuracy: float
    validation_auc: float
    seconds: float


@dataclass
class TrainResult:
    model: Network
    epoch_log: list[EpochRecord]
    best_epoch: int
    best_auc: float
    trained_on: frozenset[str] = field(default_factory=frozenset)
    validated_on: frozenset[str] = field(default_factory=frozenset)


def balanced_subset(labels: np.ndarray, size: int, rng: np.random.Generator) -> np.ndarray:
    """Indices of up to size // 2 windows per class, drawn without replacement.

    Raises:
        DataError: either class is absent or the subset would be empty
    """
    labels = np.asarray(labels)
    pos, neg = np.flatnonzero(labels == 1), np.flatnonzero(labels == 0)
    if pos.shape[0] == 0 or neg.shape[0] == 0:
        raise DataError(
            "training pool needs seizure and non-seizure windows",
            details={"seizure": int(pos.shape[0]), "non_seizure": int(neg.shape[0])},
        )
    per_class = min(size // 2, pos.shape[0], neg.shape[0])
    if per_class < 1:
        raise DataError(f"balanced training subset of size {size} is empty")
    chosen = np.concatenate([
        rng.choice(pos, per_class, replace=False),
        rng.choice(neg, per_class, replace=False),
    ])
    return np.sort(chosen)


def subject_trace(model, subject: ValidationSubject, fusion_mode: str = "max") -> np.ndarray:
    """Channel-fused seizure probability per window for a CNN or baseline model."""
    per_channel = [model.predict_proba(ch) for ch in subject.channels]
    WINDOWS_SCORED.labels(model=getattr(model, "name", "baseline")).inc(subject.n_windows)
    return channel_fuse(per_channel, fusion_mode)


def validation_auc(
    model: Network,
    subjects: Sequence[ValidationSubject],
    post: PostProcessConfig,
    apply_postprocess: bool = True,
) -> float:
    """AUC over all validation subjects' (optionally post-processed) traces pooled."""
    traces, labels = [], []
    for s in subjects:
        trace = subject_trace(model, s, post.channel_fusion)
        traces.append(postprocess(trace, post) if apply_postprocess else trace)
        labels.append(s.labels)
    return auc(roc(np.concatenate(traces), np.concatenate(labels)))


def train_model(
    spec: NetworkSpec,
    train: WindowSet,
    validation: Sequence[ValidationSubject],
    optimizer: OptimizerConfig = OptimizerConfig(),
    training: TrainingConfig = TrainingConfig(),
    post: PostProcessConfig = PostProcessConfig(),
    seed: int = 0,
) -> TrainResult:
    """Train on a balanced subset, keeping the epoch with the best validation AUC.

    The subset holds at most ``max_train_fraction`` times the number of
    validation windows. Each epoch reshuffles it into mini-batches; after each
    epoch the validation AUC is measured in inference mode. Ties keep the
    earliest epoch. The returned weights are rounded to float32.

    Raises:
        DataError: empty or single-class training pool, or validation labels
            holding a single class
        NumericError: the loss becomes non-finite
    """
    if len(train) == 0:
        raise DataError("empty training set")
    val_labels = np.concatenate([s.labels for s in validation]) if validation else np.array([])
    if val_labels.size == 0 or val_labels.min() == val_labels.max():
        raise DataError("validation data must contain seizure and non-seizure seconds")

    rng = np.random.Generator(np.random.PCG64(seed))
    n_val = sum(s.n_windows for s in validation)
    idx = balanced_subset(train.labels, int(training.max_train_fraction * n_val), rng)
    x, y = train.windows[idx], np.asarray(train.labels[idx], dtype=np.intp)
    trained_on = frozenset(str(s) for s in np.unique(train.subjects[idx]))
    logger.info(
        "training %s on %d balanced windows from %d subjects, validating on %d windows",
        spec.name, x.shape[0], len(trained_on), n_val,
    )

    model = assemble(spec, seed)
    opt = SgdMomentum(optimizer)
    params, grads = model.parameters(), model.gradients()
    log: list[EpochRecord] = []
    best_auc, best_epoch, best_state = -np.inf, 0, model.snapshot()

    for epoch in range(1, training.epochs + 1):
        started = time.perf_counter()
        order = rng.permutation(x.shape[0])
        loss_sum, correct = 0.0, 0
        for start in range(0, order.shape[0], optimizer.batch_size):
            batch = order[start:start + optimizer.batch_size]
            logits = model.forward_logits(x[batch, None, :], "train")
            loss, grad = softmax_cross_entropy(logits, y[batch])
            if not np.isfinite(loss):
                raise NumericError(
                    f"training loss became non-finite at epoch {epoch}",
                    details={"epoch": epoch, "arch": spec.name},
                )
            model.backward(grad)
            opt.step(params, grads)
            loss_sum += loss * batch.shape[0]
            correct += int((logits.argmax(axis=1) == y[batch]).sum())

        val = validation_auc(model, validation, post, training.validation_postprocess)
        elapsed = time.perf_counter() - started
        record = EpochRecord(epoch, loss_sum / x.shape[0], correct / x.shape[0], val, elapsed)
        log.append(record)
        EPOCHS.labels(arch=spec.name).inc()
        EPOCH_SECONDS.observe(elapsed)
        logger.info(
            "%s epoch %d/%d loss=%.4f acc=%.3f val_auc=%.2f (%.1fs)",
            spec.name, epoch, training.epochs, record.train_loss, record.train_accuracy, val, elapsed,
        )
        if val > best_auc:
            best_auc, best_epoch, best_state = val, epoch, model.snapshot()

    model.restore([a.astype(np.float32).astype(np.float64) for a in best_state])
    model.best_epoch = best_epoch
    BEST_VALIDATION_AUC.set(best_auc)
    logger.info("%s best validation AUC %.2f at epoch %d", spec.name, best_auc, best_epoch)
    return TrainResult(
        model=model,
        epoch_log=log,
        best_epoch=best_epoch,
        best_auc=float(best_auc),
        trained_on=trained_on,
        validated_on=frozenset(s.subject_id for s in validation),
    )

"""Glue from recordings to fold reports.

Windows are kept unstandardized after preprocessing: the baseline features
need the amplitude, and the CNN input is standardized per window on the way
into the network when the preprocessing config asks for it.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ..arch import build_named
from ..config import ExperimentConfig, PostProcessConfig, PreprocessConfig
from ..dsp import preprocess, standardize_windows
from ..eegio.recording import EegRecording, LabelTrack
from ..errors import DataError
from ..logging import logger
from ..nncore.network import Network
from ..provenance import derive_seed
from ..shallow import BaselineModel, feature_matrix, train_baseline
from .fusion import fuse
from .loo import FoldPlan, FoldReport, loo_harness
from .metrics import DEFAULT_FD_THRESHOLDS, SensitivityResult, auc, auc90, fd_table, roc, sensitivity_at_fdh
from .postprocess import postprocess
from .training import EpochRecord, ValidationSubject, WindowSet, balanced_subset, subject_trace, train_model


@dataclass
class SubjectData:
    subject_id: str
    channels: list[np.ndarray]
    labels: np.ndarray
    fs: float = 32.0

    @property
    def n_windows(self) -> int:
        return self.channels[0].shape[0]


@dataclass
class FoldModel:
    cnn: Optional[Network] = None
    baseline: Optional[BaselineModel] = None
    best_epoch: Optional[int] = None
    epoch_log: list[EpochRecord] = field(default_factory=list)
    trained_on: frozenset[str] = field(default_factory=frozenset)
    validated_on: frozenset[str] = field(default_factory=frozenset)


def prepare_subject(
    rec: EegRecording,
    track: LabelTrack,
    cfg: PreprocessConfig = PreprocessConfig(),
    max_workers: int = 1,
) -> SubjectData:
    """Preprocess every channel and align labels to window starts.

    Raises:
        DataError: the label track is shorter than the window count
    """
    raw_cfg = cfg.model_copy(update={"standardize": False})
    batches = preprocess(rec, raw_cfg, max_workers=max_workers)
    n_windows = len(batches[0])
    if len(track) < n_windows:
        raise DataError(
            f"{rec.subject_id}: {len(track)} label seconds for {n_windows} windows",
            details={"subject_id": rec.subject_id},
        )
    return SubjectData(
        subject_id=rec.subject_id,
        channels=[b.windows for b in batches],
        labels=track.labels[:n_windows].astype(np.int8),
        fs=float(cfg.target_rate_hz),
    )


def align_labels(labels: np.ndarray, n_windows: int) -> np.ndarray:
    """Window-start alignment: window k takes the label of second k."""
    labels = np.asarray(labels)
    if labels.shape[0] < n_windows:
        raise DataError(f"{labels.shape[0]} label seconds for a trace of {n_windows}")
    return labels[:n_windows]


def cnn_channels(subject: SubjectData, standardize: bool) -> list[np.ndarray]:
    return [standardize_windows(ch) for ch in subject.channels] if standardize else subject.channels


def window_pool(subjects: Sequence[SubjectData], standardize: bool) -> WindowSet:
    windows, labels, owners = [], [], []
    for s in subjects:
        for ch in cnn_channels(s, standardize):
            windows.append(ch)
            labels.append(s.labels)
            owners.append(np.full(ch.shape[0], s.subject_id, dtype=object))
    return WindowSet(np.concatenate(windows), np.concatenate(labels), np.concatenate(owners))


def validation_set(subjects: Sequence[SubjectData], standardize: bool) -> list[ValidationSubject]:
    return [ValidationSubject(s.subject_id, cnn_channels(s, standardize), s.labels) for s in subjects]


def fit_baseline(subjects: Sequence[SubjectData], cfg: ExperimentConfig, seed: int) -> tuple[BaselineModel, frozenset[str]]:
    """Baseline on the largest balanced subset of the subjects' raw windows."""
    pool = window_pool(subjects, standardize=False)
    rng = np.random.Generator(np.random.PCG64(seed))
    idx = balanced_subset(pool.labels, len(pool), rng)
    fs = subjects[0].fs
    model = train_baseline(feature_matrix(pool.windows[idx], fs), pool.labels[idx], cfg.baseline)
    return model, frozenset(str(s) for s in np.unique(pool.subjects[idx]))


def train_fold(subjects: Sequence[SubjectData], cfg: ExperimentConfig, seed: int) -> FoldModel:
    """Fit the configured CNN (unless arch is baseline) and the baseline on ``subjects``."""
    baseline, baseline_on = fit_baseline(subjects, cfg, derive_seed(seed, "baseline"))
    if cfg.arch == "baseline":
        return FoldModel(baseline=baseline, trained_on=baseline_on)
    standardize = cfg.preprocess.standardize
    result = train_model(
        build_named(cfg.arch),
        window_pool(subjects, standardize),
        validation_set(subjects, standardize),
        cfg.optimizer,
        cfg.training,
        cfg.postprocess,
        seed=derive_seed(seed, cfg.arch),
    )
    return FoldModel(
        cnn=result.model,
        baseline=baseline,
        best_epoch=result.best_epoch,
        epoch_log=result.epoch_log,
        trained_on=result.trained_on | baseline_on,
        validated_on=result.validated_on,
    )


def score_subject(model: FoldModel, subject: SubjectData, cfg: ExperimentConfig) -> dict[str, np.ndarray]:
    """Raw channel-fused traces keyed by classifier ("cnn", "baseline")."""
    traces = {}
    mode = cfg.postprocess.channel_fusion
    if model.cnn is not None:
        val = ValidationSubject(subject.subject_id, cnn_channels(subject, cfg.preprocess.standardize), subject.labels)
        traces["cnn"] = subject_trace(model.cnn, val, mode)
    if model.baseline is not None:
        raw = ValidationSubject(subject.subject_id, subject.channels, subject.labels)
        traces["baseline"] = subject_trace(_FeatureScorer(model.baseline, subject.fs), raw, mode)
    return traces


@dataclass
class _FeatureScorer:
    model: BaselineModel
    fs: float
    name: str = "baseline"

    def predict_proba(self, windows: np.ndarray) -> np.ndarray:
        return self.model.predict_proba(windows, self.fs)


def evaluate_trace(
    trace: np.ndarray, labels: np.ndarray, post: PostProcessConfig
) -> tuple[float, float, SensitivityResult, list]:
    """(AUC, AUC90, sensitivity at the FD/h limit, FD/h table) of a raw trace."""
    processed = postprocess(trace, post)
    curve = roc(processed, labels)
    sens = sensitivity_at_fdh(processed, labels, post.max_fdh, post.collar_s)
    table = fd_table(processed, labels, DEFAULT_FD_THRESHOLDS, post.collar_s)
    return auc(curve), auc90(curve), sens, table


def evaluate_fold(model: FoldModel, subject: SubjectData, plan: FoldPlan, cfg: ExperimentConfig) -> FoldReport:
    traces = score_subject(model, subject, cfg)
    post = cfg.postprocess
    primary = "baseline" if cfg.arch == "baseline" else "cnn"
    auc_, auc90_, sens, table = evaluate_trace(traces[primary], subject.labels, post)
    comparisons = {}
    for name, trace in traces.items():
        curve = roc(postprocess(trace, post), subject.labels)
        comparisons[name] = (auc(curve), auc90(curve))
    if "cnn" in traces and "baseline" in traces:
        fused = fuse(traces["cnn"], traces["baseline"], cfg.fusion)
        curve = roc(postprocess(fused, post), subject.labels)
        comparisons["fused"] = (auc(curve), auc90(curve))
    return FoldReport(
        test_subject=subject.subject_id,
        auc=auc_,
        auc90=auc90_,
        sensitivity_at_fdh=sens.sensitivity,
        fd_table=table,
        best_epoch=model.best_epoch,
        fdh_satisfied=sens.satisfied,
        comparisons=comparisons,
        traces=traces,
        labels=subject.labels,
    )


def run_loo(subjects: Sequence[SubjectData], cfg: ExperimentConfig) -> list[FoldReport]:
    logger.info("leave-one-subject-out: %d subjects, arch=%s", len(subjects), cfg.arch)
    return loo_harness(
        subjects,
        lambda train, seed: train_fold(train, cfg, seed),
        lambda model, subject, plan: evaluate_fold(model, subject, plan, cfg),
        master_seed=cfg.seed,
        max_workers=cfg.threads,
    )

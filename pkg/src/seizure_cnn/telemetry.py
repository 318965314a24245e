"""Run metrics for training and evaluation.

Metrics live in a dedicated registry (not the process-global default) so a
batch run can dump exactly its own counters with ``write_metrics``, e.g. for
a node-exporter textfile collector.
"""
from pathlib import Path

from prometheus_client import CollectorRegistry, Counter, Gauge, Histogram, write_to_textfile

REGISTRY = CollectorRegistry()

EPOCHS = Counter(
    "seizure_cnn_epochs_total", "Training epochs completed", ["arch"], registry=REGISTRY
)
FOLDS = Counter(
    "seizure_cnn_folds_total", "Leave-one-subject-out folds completed", registry=REGISTRY
)
WINDOWS_SCORED = Counter(
    "seizure_cnn_windows_scored_total", "Windows passed through a classifier", ["model"],
    registry=REGISTRY,
)
EPOCH_SECONDS = Histogram(
    "seizure_cnn_epoch_duration_seconds", "Wall time per training epoch",
    buckets=(0.1, 0.5, 1, 2, 5, 10, 30, 60, 120, 300), registry=REGISTRY,
)
FOLD_SECONDS = Histogram(
    "seizure_cnn_fold_duration_seconds", "Wall time per fold",
    buckets=(1, 5, 15, 30, 60, 120, 300, 600, 1800), registry=REGISTRY,
)
BEST_VALIDATION_AUC = Gauge(
    "seizure_cnn_best_validation_auc", "Best validation AUC (percent) of the last training run",
    registry=REGISTRY,
)


def write_metrics(path: Path) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    write_to_textfile(str(path), REGISTRY)

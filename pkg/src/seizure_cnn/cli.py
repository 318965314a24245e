"""Command line entry point: ``python -m seizure_cnn <command> ...``.

Every command reads an optional JSON experiment config (``--config``) and
applies the global overrides ``--seed``, ``--out`` and ``--threads`` on top.
Results go to CSV files under the output directory; stdout carries a short
JSON summary, stderr carries logs and, on failure, the error as JSON.

Exit codes: 0 success, 1 usage or configuration error, 2 data or shape
error, 3 numeric failure or train/test leakage.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Any, Optional, Sequence

import numpy as np
import pandas as pd
from pydantic import BaseModel
from pydantic import ValidationError as PydanticValidationError

from . import __version__
from .arch import arch_report, build_from_layout, build_named, render_text, report_csv, search_cnn6_layouts
from .config import ExperimentConfig, load_experiment_config, settings
from .eegio.models import load_model, save_model
from .eegio.recording import (
    EegRecording,
    LabelTrack,
    read_labels,
    read_recording,
    recording_paths,
    write_labels,
    write_recording,
)
from .eegio.synth import synth_cohort
from .errors import ConfigurationError, DataError, StructuredError, UsageError, writing
from .evaluation.fusion import SubjectTraces, alpha_sweep, best_alpha, fuse
from .evaluation.loo import FoldReport
from .evaluation.metrics import auc, auc90, fd_table, roc, sensitivity_at_fdh, write_roc
from .evaluation.pipeline import (
    FoldModel,
    SubjectData,
    align_labels,
    fit_baseline,
    prepare_subject,
    run_loo,
    score_subject,
    validation_set,
    window_pool,
)
from .evaluation.postprocess import postprocess
from .evaluation.stats import count_winners, mean_ci
from .evaluation.traces import ProbabilityTrace, read_trace, write_trace
from .evaluation.training import train_model
from .logging import logger, run_context, setup_logging
from .nncore.network import Network
from .provenance import derive_seed, hash_data
from .telemetry import write_metrics


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        raise UsageError(message, details={"prog": self.prog})


def _override(model: BaseModel, **changes: Any) -> Any:
    """Re-validate ``model`` with non-None ``changes`` applied."""
    changes = {k: v for k, v in changes.items() if v is not None}
    if not changes:
        return model
    try:
        return type(model).model_validate({**model.model_dump(), **changes})
    except PydanticValidationError as e:
        raise ConfigurationError(
            f"invalid override for {type(model).__name__}",
            details={"errors": e.errors(include_url=False, include_context=False)},
        )


def _write_csv(frame: pd.DataFrame, path: Path) -> Path:
    with writing(path):
        path.parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(path, index=False, lineterminator="\n")
    logger.info("wrote %s (%d rows)", path, len(frame))
    return path


def _write_run_record(cfg: ExperimentConfig, command: str) -> None:
    record = {
        "command": command,
        "version": __version__,
        "seed": cfg.seed,
        "config_hash": hash_data(cfg.model_dump(mode="json")),
    }
    path = cfg.out_dir / "run.json"
    with writing(path):
        cfg.out_dir.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(record, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def load_subjects(data_dir: Optional[Path]) -> list[tuple[EegRecording, LabelTrack]]:
    """Every ``<stem>.eeg/.json/.csv`` triple in ``data_dir``, sorted by stem."""
    if data_dir is None:
        raise UsageError("no data directory: pass --data or set data_dir in the config")
    data_dir = Path(data_dir)
    if not data_dir.is_dir():
        raise DataError(f"data directory {data_dir} does not exist", details={"path": str(data_dir)})
    subjects = []
    for sidecar in sorted(data_dir.glob("*.json")):
        eeg_path, _ = recording_paths(sidecar)
        if not eeg_path.exists():
            continue
        rec = read_recording(sidecar)
        subjects.append((rec, read_labels(eeg_path.with_suffix(".csv"), rec.subject_id)))
    if not subjects:
        raise DataError(f"no recordings found in {data_dir}", details={"path": str(data_dir)})
    return subjects


def _prepared(cfg: ExperimentConfig, data: Optional[Path]) -> list[SubjectData]:
    pairs = load_subjects(data or cfg.data_dir)
    return [prepare_subject(rec, track, cfg.preprocess, cfg.threads) for rec, track in pairs]


def cmd_synth(args: argparse.Namespace, cfg: ExperimentConfig) -> dict:
    n = cfg.n_subjects if args.subjects is None else args.subjects
    if n < 1:
        raise UsageError(f"--subjects must be at least 1, got {n}")
    synth_cfg = _override(cfg.synth, duration_s=args.duration, n_channels=args.channels)
    manifest = []
    for rec, track in synth_cohort(n, synth_cfg, cfg.seed):
        eeg_path, json_path = write_recording(rec, cfg.out_dir / rec.subject_id)
        labels_path = write_labels(track, cfg.out_dir / f"{rec.subject_id}.csv")
        manifest.append({
            "subject_id": rec.subject_id,
            "seed": derive_seed(cfg.seed, rec.subject_id),
            "recording": str(eeg_path),
            "sidecar": str(json_path),
            "labels": str(labels_path),
            "seizure_seconds": track.seizure_seconds,
        })
    return {"subjects": manifest}


def cmd_inspect(args: argparse.Namespace, cfg: ExperimentConfig) -> Optional[dict]:
    if args.search:
        return {"layouts": search_cnn6_layouts()}
    if args.layout:
        spec = build_from_layout(args.arch or "custom", args.layout)
    elif args.arch:
        spec = build_named(args.arch)
    else:
        raise UsageError("inspect needs an architecture name or --layout")
    report = arch_report(spec, args.input_len)
    if args.csv:
        report_csv(report, Path(args.csv))
    sys.stdout.write(render_text(report))
    return None


def cmd_train(args: argparse.Namespace, cfg: ExperimentConfig) -> dict:
    subjects = _prepared(cfg, args.data)
    ids = [s.subject_id for s in subjects]
    if cfg.arch == "baseline":
        model, _ = fit_baseline(subjects, cfg, derive_seed(cfg.seed, "baseline"))
        manifest, _ = save_model(model, cfg.out_dir / "baseline")
        _write_csv(pd.DataFrame({"iteration": np.arange(len(model.loss_history)), "loss": model.loss_history}),
                   cfg.out_dir / "loss_log.csv")
        return {"model": str(manifest), "subjects": ids}
    standardize = cfg.preprocess.standardize
    result = train_model(
        build_named(cfg.arch),
        window_pool(subjects, standardize),
        validation_set(subjects, standardize),
        cfg.optimizer,
        cfg.training,
        cfg.postprocess,
        seed=derive_seed(cfg.seed, cfg.arch),
    )
    manifest, _ = save_model(result.model, cfg.out_dir / cfg.arch)
    log = pd.DataFrame(
        [(r.epoch, r.train_loss, r.train_accuracy, r.validation_auc) for r in result.epoch_log],
        columns=["epoch", "train_loss", "train_accuracy", "validation_auc"],
    )
    _write_csv(log, cfg.out_dir / "epoch_log.csv")
    return {"model": str(manifest), "best_epoch": result.best_epoch, "best_validation_auc": result.best_auc}


def cmd_score(args: argparse.Namespace, cfg: ExperimentConfig) -> dict:
    model = load_model(args.model)
    fold_model = FoldModel(cnn=model) if isinstance(model, Network) else FoldModel(baseline=model)
    written = []
    for subject in _prepared(cfg, args.data):
        traces = score_subject(fold_model, subject, cfg)
        (trace,) = traces.values()
        written.append(str(write_trace(ProbabilityTrace(subject.subject_id, trace), cfg.out_dir / "traces" / f"{subject.subject_id}.csv")))
    return {"traces": written}


def cmd_eval(args: argparse.Namespace, cfg: ExperimentConfig) -> dict:
    trace = read_trace(args.trace)
    labels = align_labels(read_labels(args.labels).labels, len(trace))
    post = cfg.postprocess
    processed = postprocess(trace.values, post)
    curve = roc(processed, labels)
    sens = sensitivity_at_fdh(processed, labels, post.max_fdh, post.collar_s)
    metrics = {
        "subject": trace.subject_id,
        "auc": auc(curve),
        "auc90": auc90(curve),
        "sensitivity_at_fdh": sens.sensitivity,
        "fdh_limit": post.max_fdh,
        "fdh_threshold": sens.threshold,
        "fdh_satisfied": sens.satisfied,
    }
    _write_csv(pd.DataFrame([metrics]), cfg.out_dir / "metrics.csv")
    table = fd_table(processed, labels, collar_s=post.collar_s)
    _write_csv(pd.DataFrame([r.__dict__ for r in table]), cfg.out_dir / "fd_table.csv")
    write_roc(curve, cfg.out_dir / "roc.csv")
    return metrics


def cmd_fuse(args: argparse.Namespace, cfg: ExperimentConfig) -> dict:
    fusion = _override(cfg.fusion, alpha=args.alpha, mode=args.mode)
    cnn, svm = read_trace(args.cnn), read_trace(args.svm)
    out = Path(args.output) if args.output else cfg.out_dir / "fused.csv"
    write_trace(ProbabilityTrace(cnn.subject_id, fuse(cnn.values, svm.values, fusion)), out)
    return {"fused": str(out), "alpha": fusion.alpha, "mode": fusion.mode}


def _collect_traces(cnn_dir: Path, svm_dir: Path, labels_dir: Path) -> list[SubjectTraces]:
    subjects = []
    for path in sorted(Path(cnn_dir).glob("*.csv")):
        cnn = read_trace(path)
        svm = read_trace(Path(svm_dir) / path.name)
        labels = read_labels(Path(labels_dir) / path.name).labels
        subjects.append(SubjectTraces(cnn.subject_id, cnn.values, svm.values, align_labels(labels, len(cnn))))
    if len(subjects) < 2:
        raise DataError(f"alpha sweep needs traces for at least 2 subjects in {cnn_dir}")
    return subjects


def cmd_sweep(args: argparse.Namespace, cfg: ExperimentConfig) -> dict:
    subjects = _collect_traces(args.cnn_dir, args.svm_dir, args.labels_dir)
    rows = alpha_sweep(subjects, cfg.alpha_grid, cfg.postprocess)
    _write_csv(pd.DataFrame([r.__dict__ for r in rows]), cfg.out_dir / "alpha_sweep.csv")
    return {
        mode: {metric: best_alpha(rows, metric, mode).alpha for metric in ("auc", "auc90")}
        for mode in ("arithmetic", "geometric")
    }


def fold_frame(reports: Sequence[FoldReport]) -> pd.DataFrame:
    """One row per fold, then ``mean`` and ``ci95`` summary rows."""
    names = sorted({name for r in reports for name in r.comparisons})
    rows = []
    for r in reports:
        row = {
            "subject": r.test_subject,
            "auc": r.auc,
            "auc90": r.auc90,
            "sensitivity_at_fdh": r.sensitivity_at_fdh,
            "fdh_satisfied": r.fdh_satisfied,
            "best_epoch": r.best_epoch,
        }
        for name in names:
            row[f"{name}_auc"], row[f"{name}_auc90"] = r.comparisons.get(name, (np.nan, np.nan))
        rows.append(row)
    frame = pd.DataFrame(rows)
    metric_cols = [c for c in frame.columns if c not in ("subject", "fdh_satisfied", "best_epoch")]
    summary = {c: mean_ci(frame[c].to_numpy(dtype=np.float64)) for c in metric_cols}
    mean_row = {"subject": "mean", **{c: m for c, (m, _) in summary.items()}}
    ci_row = {"subject": "ci95", **{c: h for c, (_, h) in summary.items()}}
    return pd.concat([frame, pd.DataFrame([mean_row, ci_row])], ignore_index=True)


def cmd_loo(args: argparse.Namespace, cfg: ExperimentConfig) -> dict:
    if args.subjects is not None:
        if args.subjects < 2:
            raise UsageError(f"--subjects must be at least 2 for leave-one-subject-out, got {args.subjects}")
        pairs = synth_cohort(args.subjects, cfg.synth, cfg.seed)
        subjects = [prepare_subject(rec, track, cfg.preprocess, cfg.threads) for rec, track in pairs]
    else:
        subjects = _prepared(cfg, args.data)
    reports = run_loo(subjects, cfg)

    frame = fold_frame(reports)
    _write_csv(frame, cfg.out_dir / "folds.csv")
    fd_rows = [{"subject": r.test_subject, **row.__dict__} for r in reports for row in r.fd_table]
    _write_csv(pd.DataFrame(fd_rows), cfg.out_dir / "fd_tables.csv")
    for r in reports:
        for name, trace in r.traces.items():
            write_trace(ProbabilityTrace(r.test_subject, trace), cfg.out_dir / "traces" / name / f"{r.test_subject}.csv")
        write_labels(LabelTrack(r.test_subject, r.labels), cfg.out_dir / "labels" / f"{r.test_subject}.csv")

    by_classifier = {name: [r.comparisons[name][0] for r in reports] for name in reports[0].comparisons}
    summary = frame.set_index("subject").loc[["mean", "ci95"], ["auc", "auc90"]]
    return {
        "folds": len(reports),
        "auc_mean": float(summary.loc["mean", "auc"]),
        "auc_ci95": float(summary.loc["ci95", "auc"]),
        "auc90_mean": float(summary.loc["mean", "auc90"]),
        "auc90_ci95": float(summary.loc["ci95", "auc90"]),
        "top_auc_subjects": count_winners(by_classifier),
    }


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", type=Path, default=None, help="JSON experiment config")
    common.add_argument("--seed", type=int, default=None, help="master seed")
    common.add_argument("--out", type=Path, default=None, help="output directory")
    common.add_argument("--threads", type=int, default=None, help="parallel folds / channels")
    common.add_argument("--log-level", default=None, help="DEBUG, INFO, WARNING, ...")
    common.add_argument("--metrics-file", type=Path, default=None, help="write run metrics in Prometheus text format")

    parser = _Parser(prog="seizure_cnn", description="Neonatal EEG seizure detection experiments")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", parents=[common], help="generate synthetic subjects")
    p.add_argument("--subjects", type=int, default=None)
    p.add_argument("--duration", type=float, default=None, help="seconds per subject")
    p.add_argument("--channels", type=int, default=None)
    p.set_defaults(handler=cmd_synth)

    p = sub.add_parser("inspect", parents=[common], help="shapes, receptive fields and parameter counts")
    p.add_argument("arch", nargs="?", choices=["cnn11", "cnn6"])
    p.add_argument("--layout", default=None, help='compact layout, e.g. "c32k4 c32k4 p3s2 ... c2k4"')
    p.add_argument("--input-len", type=int, default=None)
    p.add_argument("--csv", default=None, help="also write the report as CSV")
    p.add_argument("--search", action="store_true", help="list six-conv layouts meeting the cnn6 constraints")
    p.set_defaults(handler=cmd_inspect)

    p = sub.add_parser("train", parents=[common], help="train on every subject in a data directory")
    p.add_argument("--data", type=Path, default=None)
    p.set_defaults(handler=cmd_train)

    p = sub.add_parser("score", parents=[common], help="write per-subject probability traces")
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--data", type=Path, default=None)
    p.set_defaults(handler=cmd_score)

    p = sub.add_parser("eval", parents=[common], help="metrics of one trace against its labels")
    p.add_argument("--trace", type=Path, required=True)
    p.add_argument("--labels", type=Path, required=True)
    p.set_defaults(handler=cmd_eval)

    p = sub.add_parser("fuse", parents=[common], help="combine a CNN and a baseline trace")
    p.add_argument("--cnn", type=Path, required=True)
    p.add_argument("--svm", type=Path, required=True)
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--mode", choices=["arithmetic", "geometric"], default=None)
    p.add_argument("--output", type=Path, default=None)
    p.set_defaults(handler=cmd_fuse)

    p = sub.add_parser("sweep", parents=[common], help="fusion weight sweep over subjects")
    p.add_argument("--cnn-dir", type=Path, required=True)
    p.add_argument("--svm-dir", type=Path, required=True)
    p.add_argument("--labels-dir", type=Path, required=True)
    p.set_defaults(handler=cmd_sweep)

    p = sub.add_parser("loo", parents=[common], help="leave-one-subject-out evaluation")
    source = p.add_mutually_exclusive_group()
    source.add_argument("--data", type=Path, default=None)
    source.add_argument("--subjects", type=int, default=None, help="synthesise N subjects instead of reading --data")
    p.set_defaults(handler=cmd_loo)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as e:
        print(json.dumps(e.to_dict()), file=sys.stderr)
        return e.exit_code

    setup_logging(args.log_level or settings.log_level)
    try:
        with run_context() as run_id:
            cfg = load_experiment_config(args.config, seed=args.seed, out_dir=args.out, threads=args.threads)
            logger.info("%s: run %s, seed %d, out %s", args.command, run_id, cfg.seed, cfg.out_dir)
            result = args.handler(args, cfg)
            if args.command != "inspect":
                _write_run_record(cfg, args.command)
            if result is not None:
                print(json.dumps(result, indent=2, default=str))
        return 0
    except StructuredError as e:
        logger.error("%s failed: %s", args.command, e.message)
        print(json.dumps(e.to_dict(), default=str), file=sys.stderr)
        return e.exit_code
    finally:
        if args.metrics_file:
            write_metrics(args.metrics_file)

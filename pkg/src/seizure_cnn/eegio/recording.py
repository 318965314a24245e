"""Recording and label-track containers plus their on-disk formats.

A recording is two files sharing a stem:

    <stem>.eeg   little-endian float32 samples, channel-major
    <stem>.json  RecordingHeader sidecar

Labels are a CSV with header ``second,label``: one row per whole second
starting at 0, label 0 (background) or 1 (seizure).
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

import numpy as np
import pandas as pd
from pydantic import ValidationError as PydanticValidationError

from ..errors import DataError, writing
from ..schemas import RecordingHeader

PathLike = Union[str, Path]


@dataclass
class EegRecording:
    """Multi-channel EEG, samples shaped (n_channels, n_samples) float32."""
    subject_id: str
    sample_rate_hz: float
    channel_names: list[str]
    samples: np.ndarray

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float32)
        if self.samples.ndim != 2:
            raise DataError(f"samples must be 2-D (channels, samples), got shape {self.samples.shape}")
        if len(self.channel_names) != self.samples.shape[0]:
            raise DataError(
                f"{len(self.channel_names)} channel names for {self.samples.shape[0]} channels",
                details={"subject_id": self.subject_id},
            )

    @property
    def n_channels(self) -> int:
        return self.samples.shape[0]

    @property
    def n_samples(self) -> int:
        return self.samples.shape[1]

    @property
    def duration_s(self) -> float:
        return self.n_samples / self.sample_rate_hz

    def header(self) -> RecordingHeader:
        return RecordingHeader(
            subject_id=self.subject_id,
            sample_rate_hz=self.sample_rate_hz,
            n_channels=self.n_channels,
            n_samples=self.n_samples,
            channel_names=list(self.channel_names),
        )


@dataclass
class LabelTrack:
    subject_id: str
    labels: np.ndarray

    def __post_init__(self):
        labels = np.asarray(self.labels)
        if labels.ndim != 1:
            raise DataError(f"labels must be 1-D, got shape {labels.shape}")
        if labels.size and not np.isin(labels, (0, 1)).all():
            bad = labels[~np.isin(labels, (0, 1))][0]
            raise DataError(f"label value {bad!r} is not binary", details={"subject_id": self.subject_id})
        self.labels = labels.astype(np.int8)

    def __len__(self) -> int:
        return self.labels.shape[0]

    @property
    def seizure_seconds(self) -> int:
        return int(self.labels.sum())


def _stem(path: PathLike) -> Path:
    p = Path(path)
    return p.with_suffix("") if p.suffix in (".eeg", ".json") else p


def recording_paths(path: PathLike) -> tuple[Path, Path]:
    stem = _stem(path)
    return stem.parent / f"{stem.name}.eeg", stem.parent / f"{stem.name}.json"


def write_recording(rec: EegRecording, path: PathLike) -> tuple[Path, Path]:
    eeg_path, json_path = recording_paths(path)
    with writing(eeg_path):
        eeg_path.parent.mkdir(parents=True, exist_ok=True)
        eeg_path.write_bytes(np.ascontiguousarray(rec.samples, dtype="<f4").tobytes(order="C"))
        json_path.write_text(rec.header().model_dump_json(indent=2) + "\n", encoding="utf-8")
    return eeg_path, json_path


def read_header(path: PathLike) -> RecordingHeader:
    _, json_path = recording_paths(path)
    try:
        return RecordingHeader.model_validate_json(json_path.read_text(encoding="utf-8"))
    except OSError as e:
        raise DataError(f"cannot read sidecar {json_path}: {e}", details={"path": str(json_path)})
    except PydanticValidationError as e:
        raise DataError(
            f"invalid sidecar {json_path}",
            details={"path": str(json_path), "errors": e.errors(include_url=False, include_context=False)},
        )


def read_recording(path: PathLike) -> EegRecording:
    """Load a recording; payload size must match the sidecar exactly.

    Raises:
        DataError: missing files, invalid sidecar, or sample count mismatch
    """
    header = read_header(path)
    eeg_path, _ = recording_paths(path)
    try:
        payload = eeg_path.read_bytes()
    except OSError as e:
        raise DataError(f"cannot read payload {eeg_path}: {e}", details={"path": str(eeg_path)})
    expected = header.n_channels * header.n_samples
    if len(payload) % 4 or len(payload) // 4 != expected:
        raise DataError(
            f"payload {eeg_path.name} holds {len(payload) / 4:g} samples, sidecar declares {expected}",
            details={"path": str(eeg_path), "bytes": len(payload), "expected_samples": expected},
        )
    samples = np.frombuffer(payload, dtype="<f4").reshape(header.n_channels, header.n_samples)
    return EegRecording(
        subject_id=header.subject_id,
        sample_rate_hz=header.sample_rate_hz,
        channel_names=list(header.channel_names),
        samples=samples.astype(np.float32),
    )


def write_labels(track: LabelTrack, path: PathLike) -> Path:
    path = Path(path)
    frame = pd.DataFrame({"second": np.arange(len(track)), "label": track.labels.astype(int)})
    with writing(path):
        path.parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(path, index=False, lineterminator="\n")
    return path


def read_labels(path: PathLike, subject_id: Optional[str] = None) -> LabelTrack:
    """Load a per-second label CSV.

    Raises:
        DataError: wrong header, non-binary label, or seconds that are not
            0, 1, 2, ... without gaps
    """
    path = Path(path)
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False)
    except (OSError, pd.errors.EmptyDataError, pd.errors.ParserError) as e:
        raise DataError(f"cannot read labels {path}: {e}", details={"path": str(path)})
    if list(frame.columns) != ["second", "label"]:
        raise DataError(
            f"label file {path.name} must have header 'second,label', got {','.join(frame.columns)}",
            details={"path": str(path)},
        )
    bad = ~frame["label"].str.strip().isin(["0", "1"])
    if bad.any():
        row = int(np.flatnonzero(bad.to_numpy())[0])
        raise DataError(
            f"label value {frame['label'].iloc[row]!r} is not binary",
            details={"path": str(path), "row": row + 1},
        )
    seconds = pd.to_numeric(frame["second"].str.strip(), errors="coerce").to_numpy()
    expected = np.arange(len(frame))
    if not np.array_equal(seconds, expected):
        row = int(np.flatnonzero(seconds != expected)[0])
        raise DataError(
            f"label seconds are not contiguous from 0 (row {row + 1} has {frame['second'].iloc[row]!r})",
            details={"path": str(path), "row": row + 1},
        )
    labels = frame["label"].str.strip().astype(int).to_numpy()
    return LabelTrack(subject_id=subject_id or path.stem, labels=labels)

"""ProbabilityTrace CSV files: header ``second,probability``, one row per window start."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

import numpy as np
import pandas as pd

from ..errors import DataError, writing

PathLike = Union[str, Path]


@dataclass
class ProbabilityTrace:
    subject_id: str
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 1:
            raise DataError(f"trace must be 1-D, got shape {v.shape}")
        if v.size and (not np.isfinite(v).all() or v.min() < 0.0 or v.max() > 1.0):
            raise DataError(f"trace {self.subject_id} has values outside [0, 1]")
        self.values = v

    def __len__(self) -> int:
        return self.values.shape[0]


def write_trace(trace: ProbabilityTrace, path: PathLike) -> Path:
    path = Path(path)
    frame = pd.DataFrame({"second": np.arange(len(trace)), "probability": trace.values})
    with writing(path):
        path.parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(path, index=False, lineterminator="\n")
    return path


def read_trace(path: PathLike, subject_id: Optional[str] = None) -> ProbabilityTrace:
    """Load a trace; floats are parsed round-trip exact.

    Raises:
        DataError: wrong header, gaps in the second column, or values outside [0, 1]
    """
    path = Path(path)
    try:
        frame = pd.read_csv(path, float_precision="round_trip")
    except (OSError, pd.errors.EmptyDataError, pd.errors.ParserError) as e:
        raise DataError(f"cannot read trace {path}: {e}", details={"path": str(path)})
    if list(frame.columns) != ["second", "probability"]:
        raise DataError(
            f"trace file {path.name} must have header 'second,probability'",
            details={"path": str(path), "columns": list(frame.columns)},
        )
    if not np.array_equal(frame["second"].to_numpy(), np.arange(len(frame))):
        raise DataError(f"trace seconds in {path.name} are not contiguous from 0", details={"path": str(path)})
    return ProbabilityTrace(subject_id or path.stem, frame["probability"].to_numpy(dtype=np.float64))

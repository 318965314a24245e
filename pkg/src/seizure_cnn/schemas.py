from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from .arch import NetworkSpec

ModelKind = Literal["cnn", "logistic"]


class RecordingHeader(BaseModel):
    """JSON sidecar next to a ``.eeg`` payload."""
    model_config = ConfigDict(extra="forbid", frozen=True)

    subject_id: str = Field(..., min_length=1)
    sample_rate_hz: float = Field(..., gt=0.0)
    n_channels: int = Field(..., ge=1)
    n_samples: int = Field(..., ge=1)
    channel_names: list[str]

    @model_validator(mode="after")
    def _names_match_channels(self) -> "RecordingHeader":
        if len(self.channel_names) != self.n_channels:
            raise ValueError(
                f"{len(self.channel_names)} channel names for {self.n_channels} channels"
            )
        return self


class ParameterEntry(BaseModel):
    """One array in a weights blob, in blob order."""
    model_config = ConfigDict(extra="forbid", frozen=True)

    layer: int = Field(..., ge=0)
    name: str = Field(..., min_length=1)
    shape: list[int]

    @property
    def size(self) -> int:
        n = 1
        for dim in self.shape:
            n *= dim
        return n


class ModelManifest(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    format_version: Literal[1] = 1
    kind: ModelKind
    arch: str = Field(..., min_length=1)
    network: Optional[NetworkSpec] = None
    feature_names: list[str] = Field(default_factory=list)
    l2: Optional[float] = None
    parameters: list[ParameterEntry]
    dtype: Literal["float32-le"] = "float32-le"
    content_hash: str = Field(..., min_length=64, max_length=64)
    best_epoch: Optional[int] = None

    @model_validator(mode="after")
    def _kind_has_payload(self) -> "ModelManifest":
        if self.kind == "cnn" and self.network is None:
            raise ValueError("cnn manifest without a network spec")
        if self.kind == "logistic" and not self.feature_names:
            raise ValueError("logistic manifest without feature names")
        return self

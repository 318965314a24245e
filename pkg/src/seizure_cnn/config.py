import json
import os
from pathlib import Path
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator
from pydantic import ValidationError as PydanticValidationError

from .errors import ConfigurationError

# Preprocessing pass band; seizure rhythms are generated inside it.
PASS_BAND_HZ = (0.5, 12.8)


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class Settings(_Strict):
    service_name: str = "seizure-cnn"
    log_level: str = Field(default_factory=lambda: os.getenv("SEIZURE_CNN_LOG_LEVEL", "INFO"))


class SynthConfig(_Strict):
    """Parameters of one synthetic subject.

    Amplitudes are in microvolts. ``subject_variability`` scales how far the
    per-subject draws (spectral slope, background gain, seizure rhythm and
    strength) wander from their nominal values.
    """
    seed: int = Field(default=0, ge=0)
    duration_s: float = Field(default=1200.0, ge=60.0)
    sample_rate_hz: float = Field(default=256.0, gt=0.0)
    n_channels: int = Field(default=8, ge=1)
    seizure_event_count: int = Field(default=3, ge=0)
    seizure_duration_s: int = Field(default=60, ge=1)
    seizure_freq_range_hz: tuple[float, float] = (1.0, 4.0)
    background_scale: float = Field(default=20.0, gt=0.0)
    background_exponent: float = Field(default=1.0, ge=0.0, le=3.0)
    seizure_amplitude: float = Field(default=3.0, gt=0.0)
    subject_variability: float = Field(default=1.0, gt=0.0)

    @model_validator(mode="after")
    def _frequency_range_in_band(self) -> "SynthConfig":
        lo, hi = self.seizure_freq_range_hz
        if not lo < hi:
            raise ValueError(f"empty seizure frequency range ({lo}, {hi})")
        if lo < PASS_BAND_HZ[0] or hi > PASS_BAND_HZ[1]:
            raise ValueError(f"seizure frequency range ({lo}, {hi}) outside pass band {PASS_BAND_HZ}")
        return self


class FilterSpec(_Strict):
    """Band-pass design: Kaiser-window FIR with odd tap count.

    At 256 Hz the defaults (60 dB ripple, 0.5 Hz transition) give 1859 taps.
    """
    low_cut_hz: float = Field(default=PASS_BAND_HZ[0], gt=0.0)
    high_cut_hz: float = Field(default=PASS_BAND_HZ[1], gt=0.0)
    ripple_db: float = Field(default=60.0, gt=0.0)
    transition_hz: float = Field(default=0.5, gt=0.0)

    @model_validator(mode="after")
    def _ordered_cuts(self) -> "FilterSpec":
        if not self.low_cut_hz < self.high_cut_hz:
            raise ValueError("low_cut_hz must be below high_cut_hz")
        return self


class PreprocessConfig(_Strict):
    filter: FilterSpec = FilterSpec()
    target_rate_hz: int = Field(default=32, ge=1)
    window_s: int = Field(default=8, ge=1)
    shift_s: int = Field(default=1, ge=1)
    standardize: bool = True


class OptimizerConfig(_Strict):
    learning_rate: float = Field(default=0.01, gt=0.0)
    momentum: float = Field(default=0.9, ge=0.0, lt=1.0)
    batch_size: int = Field(default=2048, ge=1)


class TrainingConfig(_Strict):
    epochs: int = Field(default=100, ge=1)
    # Balanced training subset, as a fraction of the validation window count.
    max_train_fraction: float = Field(default=0.02, gt=0.0, le=1.0)
    validation_postprocess: bool = True


class PostProcessConfig(_Strict):
    smoothing_window_s: int = Field(default=60, ge=1)
    adapt_background: bool = True
    background_window_s: int = Field(default=600, ge=60)
    background_beta: float = Field(default=1.0, gt=0.0)
    collar_s: int = Field(default=30, ge=0)
    channel_fusion: Literal["max", "mean"] = "max"
    max_fdh: float = Field(default=0.25, ge=0.0)


class FusionConfig(_Strict):
    alpha: float = Field(default=0.7, ge=0.0, le=1.0)
    mode: Literal["arithmetic", "geometric"] = "arithmetic"


class BaselineConfig(_Strict):
    l2: float = Field(default=1e-3, ge=0.0)
    max_iter: int = Field(default=2000, ge=1)
    tol: float = Field(default=1e-9, ge=0.0)


def default_alpha_grid() -> list[float]:
    return [round(0.1 * i, 1) for i in range(11)]


class ExperimentConfig(_Strict):
    data_dir: Optional[Path] = None
    out_dir: Path = Path("results")
    arch: Literal["cnn11", "cnn6", "baseline"] = "cnn11"
    seed: int = Field(default=0, ge=0)
    threads: int = Field(default=1, ge=1)
    n_subjects: int = Field(default=4, ge=1)
    synth: SynthConfig = SynthConfig()
    preprocess: PreprocessConfig = PreprocessConfig()
    optimizer: OptimizerConfig = OptimizerConfig()
    training: TrainingConfig = TrainingConfig()
    postprocess: PostProcessConfig = PostProcessConfig()
    fusion: FusionConfig = FusionConfig()
    baseline: BaselineConfig = BaselineConfig()
    alpha_grid: list[float] = Field(default_factory=default_alpha_grid)

    @model_validator(mode="after")
    def _grid_in_range(self) -> "ExperimentConfig":
        if not self.alpha_grid or any(not 0.0 <= a <= 1.0 for a in self.alpha_grid):
            raise ValueError("alpha_grid values must lie in [0, 1]")
        return self


def load_experiment_config(path: Optional[Path] = None, **overrides) -> ExperimentConfig:
    """Read a JSON experiment config and apply flag overrides.

    Args:
        path: JSON file; None means all defaults
        **overrides: top-level fields to replace (None values are ignored)

    Returns:
        Validated ExperimentConfig

    Raises:
        ConfigurationError: unreadable file, bad JSON, unknown keys, or
            values violating a constraint
    """
    raw: dict = {}
    if path is not None:
        try:
            raw = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigurationError(f"cannot read config {path}: {e}", details={"path": str(path)})
        if not isinstance(raw, dict):
            raise ConfigurationError("config root must be a JSON object", details={"path": str(path)})
    raw.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return ExperimentConfig.model_validate(raw)
    except PydanticValidationError as e:
        raise ConfigurationError(
            "invalid experiment config",
            details={"errors": e.errors(include_url=False, include_context=False)},
        )


settings = Settings()

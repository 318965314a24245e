"""Synthetic multi-channel EEG with injected rhythmic seizure events.

All randomness comes from numpy's PCG64 bit generator seeded with
``SynthConfig.seed``, consumed in a fixed order:

1. subject parameters (spectral slope, gains, seizure rhythm and strength)
2. event schedule
3. background noise, channel by channel, then the shared component
4. one seizure burst per event, in schedule order

Background is 1/f^a colored noise shaped in the frequency domain, mixed with
a component common to all channels. A seizure adds a fundamental in the
configured band plus two harmonics whose frequency drifts as a random walk,
with raised-cosine ramps at onset and offset, while the background under it
is attenuated.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Mapping, Optional, Union

import numpy as np
from pydantic import ValidationError as PydanticValidationError

from ..config import SynthConfig
from ..errors import ConfigurationError
from ..logging import logger
from ..provenance import derive_seed
from .recording import EegRecording, LabelTrack

DEFAULT_CHANNELS = ("F4-C4", "C4-O2", "F3-C3", "C3-O1", "T4-C4", "C4-Cz", "Cz-C3", "C3-T3")

EVENT_MARGIN_S = 30
SHARED_FRACTION = 0.3
BACKGROUND_ATTENUATION = 0.5
HARMONIC_GAINS = (1.0, 0.5, 0.25)


def synth_config(cfg: Union[SynthConfig, Mapping[str, Any]], **updates: Any) -> SynthConfig:
    """Validate ``cfg`` with ``updates`` applied.

    Raises:
        ConfigurationError: a field is missing, unknown or out of range
    """
    fields = cfg.model_dump() if isinstance(cfg, SynthConfig) else dict(cfg)
    try:
        return SynthConfig.model_validate({**fields, **updates})
    except PydanticValidationError as e:
        raise ConfigurationError(
            "invalid synthetic recording settings",
            details={"errors": e.errors(include_url=False, include_context=False)},
        )


@dataclass(frozen=True)
class SeizureEvent:
    start_s: int
    duration_s: int

    @property
    def end_s(self) -> int:
        return self.start_s + self.duration_s


@dataclass(frozen=True)
class SubjectParams:
    background_exponent: float
    background_gain: float
    seizure_centre_hz: float
    seizure_gain: float
    channel_involvement: np.ndarray


def channel_names(n_channels: int) -> list[str]:
    if n_channels <= len(DEFAULT_CHANNELS):
        return list(DEFAULT_CHANNELS[:n_channels])
    return [f"Ch{i + 1}" for i in range(n_channels)]


def draw_subject_params(rng: np.random.Generator, cfg: SynthConfig) -> SubjectParams:
    v = cfg.subject_variability
    lo, hi = cfg.seizure_freq_range_hz
    return SubjectParams(
        background_exponent=float(np.clip(cfg.background_exponent + v * rng.uniform(-0.3, 0.3), 0.0, 3.0)),
        background_gain=float(cfg.background_scale * np.exp(v * rng.normal(0.0, 0.2))),
        seizure_centre_hz=float(rng.uniform(lo, hi)),
        seizure_gain=float(cfg.seizure_amplitude * np.exp(v * rng.normal(0.0, 0.15))),
        channel_involvement=rng.uniform(0.4, 1.0, size=cfg.n_channels),
    )


def plan_events(cfg: SynthConfig, rng: np.random.Generator, n_seconds: Optional[int] = None) -> list[SeizureEvent]:
    """Non-overlapping events with at least EVENT_MARGIN_S seconds around each.

    Raises:
        ConfigurationError: the requested events do not fit in the recording
    """
    n_seconds = int(cfg.duration_s) if n_seconds is None else n_seconds
    k, dur = cfg.seizure_event_count, cfg.seizure_duration_s
    if k == 0:
        return []
    slack = n_seconds - k * dur - (k + 1) * EVENT_MARGIN_S
    if slack < 0:
        raise ConfigurationError(
            f"{k} events of {dur} s do not fit in {n_seconds} s",
            details={"events": k, "event_s": dur, "duration_s": n_seconds, "margin_s": EVENT_MARGIN_S},
        )
    offsets = np.sort(rng.integers(0, slack + 1, size=k))
    return [
        SeizureEvent(start_s=int(EVENT_MARGIN_S + i * (dur + EVENT_MARGIN_S) + offsets[i]), duration_s=dur)
        for i in range(k)
    ]


def colored_noise(rng: np.random.Generator, n: int, exponent: float, fs: float) -> np.ndarray:
    """Zero-mean unit-variance noise with power spectrum proportional to 1/f^exponent."""
    spectrum = np.fft.rfft(rng.standard_normal(n))
    freqs = np.fft.rfftfreq(n, d=1.0 / fs)
    shape = np.zeros_like(freqs)
    shape[1:] = freqs[1:] ** (-exponent / 2.0)
    x = np.fft.irfft(spectrum * shape, n=n)
    x -= x.mean()
    return x / x.std()


def _raised_cosine_envelope(n: int, ramp: int) -> np.ndarray:
    env = np.ones(n)
    if ramp > 0:
        rise = 0.5 - 0.5 * np.cos(np.pi * np.arange(ramp) / ramp)
        env[:ramp] = rise
        env[n - ramp:] = rise[::-1]
    return env


def seizure_burst(rng: np.random.Generator, duration_s: int, fs: float, params: SubjectParams, cfg: SynthConfig) -> np.ndarray:
    n = int(round(duration_s * fs))
    lo, hi = cfg.seizure_freq_range_hz
    steps = rng.normal(0.0, 0.03 * cfg.subject_variability, size=duration_s + 1)
    log_f = np.clip(np.log(params.seizure_centre_hz) + np.cumsum(steps), np.log(lo), np.log(hi))
    t = np.arange(n) / fs
    freq = np.interp(t, np.arange(duration_s + 1), np.exp(log_f))
    phase = 2.0 * np.pi * np.cumsum(freq) / fs + rng.uniform(0.0, 2.0 * np.pi)
    offsets = rng.uniform(0.0, 2.0 * np.pi, size=len(HARMONIC_GAINS))
    wave = sum(g * np.sin((h + 1) * phase + offsets[h]) for h, g in enumerate(HARMONIC_GAINS))
    ramp = int(round(min(10.0, duration_s / 4.0) * fs))
    return wave * _raised_cosine_envelope(n, ramp)


def synth_subject(
    cfg: Union[SynthConfig, Mapping[str, Any]], subject_id: Optional[str] = None
) -> tuple[EegRecording, LabelTrack]:
    """Generate one subject; a pure function of ``cfg``."""
    cfg = synth_config(cfg)
    fs = cfg.sample_rate_hz
    n_samples = int(cfg.duration_s * fs)
    n_seconds = int(n_samples // fs)
    rng = np.random.Generator(np.random.PCG64(cfg.seed))

    params = draw_subject_params(rng, cfg)
    events = plan_events(cfg, rng, n_seconds)

    own = np.stack([colored_noise(rng, n_samples, params.background_exponent, fs) for _ in range(cfg.n_channels)])
    shared = colored_noise(rng, n_samples, params.background_exponent, fs)
    signal = (np.sqrt(1.0 - SHARED_FRACTION) * own + np.sqrt(SHARED_FRACTION) * shared) * params.background_gain

    labels = np.zeros(n_seconds, dtype=np.int8)
    amplitude = params.seizure_gain * params.background_gain
    for event in events:
        s0 = int(round(event.start_s * fs))
        burst = seizure_burst(rng, event.duration_s, fs, params, cfg)
        s1 = s0 + burst.shape[0]
        env = _raised_cosine_envelope(burst.shape[0], int(round(min(10.0, event.duration_s / 4.0) * fs)))
        signal[:, s0:s1] *= 1.0 - (1.0 - BACKGROUND_ATTENUATION) * env
        signal[:, s0:s1] += amplitude * params.channel_involvement[:, None] * burst
        labels[event.start_s:event.end_s] = 1

    sid = subject_id or f"synth_{cfg.seed}"
    logger.debug(
        "synthesised %s: %d s, %d events, seizure rhythm %.2f Hz",
        sid, n_seconds, len(events), params.seizure_centre_hz,
    )
    rec = EegRecording(
        subject_id=sid,
        sample_rate_hz=fs,
        channel_names=channel_names(cfg.n_channels),
        samples=signal.astype(np.float32),
    )
    return rec, LabelTrack(subject_id=sid, labels=labels)


def subject_ids(n_subjects: int) -> list[str]:
    return [f"subject_{i + 1:02d}" for i in range(n_subjects)]


def synth_cohort(
    n_subjects: int, cfg: Union[SynthConfig, Mapping[str, Any]], master_seed: int
) -> list[tuple[EegRecording, LabelTrack]]:
    """``n_subjects`` independent subjects; each seed is derived from the master seed and subject id."""
    return [
        synth_subject(synth_config(cfg, seed=derive_seed(master_seed, sid)), subject_id=sid)
        for sid in subject_ids(n_subjects)
    ]

"""Preprocessing front end: band-pass, decimate, window.

The band-pass is a linear-phase Kaiser-window FIR applied by zero-padded FFT
convolution with the output centred on the input, which removes the group
delay and keeps samples aligned with the label seconds. The first and last
``numtaps // 2`` samples carry the filter transient.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy import signal as sps

from .config import FilterSpec, PreprocessConfig
from .errors import ConfigurationError, DataError
from .eegio.recording import EegRecording

VARIANCE_FLOOR = 1e-8


@dataclass
class WindowBatch:
    """Windows of one channel, ``windows`` shaped (n_windows, window_len)."""
    windows: np.ndarray
    subject_id: str
    channel: str
    start_s: np.ndarray

    def __len__(self) -> int:
        return self.windows.shape[0]


@lru_cache(maxsize=16)
def design_bandpass(fs: float, spec: FilterSpec = FilterSpec()) -> np.ndarray:
    """Odd-length Kaiser FIR taps for ``spec`` at sample rate ``fs``.

    Raises:
        ConfigurationError: the upper transition edge reaches Nyquist
    """
    nyquist = fs / 2.0
    if spec.high_cut_hz + spec.transition_hz / 2.0 >= nyquist:
        raise ConfigurationError(
            f"sample rate {fs:g} Hz too low for a {spec.high_cut_hz:g} Hz band edge",
            details={"fs": fs, "high_cut_hz": spec.high_cut_hz, "transition_hz": spec.transition_hz},
        )
    numtaps, beta = sps.kaiserord(spec.ripple_db, spec.transition_hz / nyquist)
    numtaps |= 1
    taps = sps.firwin(
        numtaps,
        [spec.low_cut_hz, spec.high_cut_hz],
        window=("kaiser", beta),
        pass_zero=False,
        fs=fs,
    )
    taps.setflags(write=False)
    return taps


def bandpass(signal: np.ndarray, fs: float, spec: FilterSpec = FilterSpec()) -> np.ndarray:
    """Zero-phase-aligned band-pass; output length equals input length."""
    taps = design_bandpass(float(fs), spec)
    x = np.asarray(signal, dtype=np.float64)
    if x.ndim != 1:
        raise DataError(f"bandpass expects a 1-D signal, got shape {x.shape}")
    return sps.fftconvolve(x, taps, mode="same")


def decimate(signal: np.ndarray, fs_in: float, fs_out: float) -> np.ndarray:
    """Keep every (fs_in / fs_out)-th sample; the input must already be band-limited.

    Raises:
        ConfigurationError: fs_in is not an integer multiple of fs_out
    """
    ratio = fs_in / fs_out
    factor = int(round(ratio))
    if factor < 1 or abs(ratio - factor) > 1e-9:
        raise ConfigurationError(
            f"cannot decimate {fs_in:g} Hz to {fs_out:g} Hz by an integer factor",
            details={"fs_in": fs_in, "fs_out": fs_out},
        )
    x = np.asarray(signal)
    return x[: (x.shape[0] // factor) * factor : factor]


def window(
    signal: np.ndarray,
    fs: int = 32,
    len_s: int = 8,
    shift_s: int = 1,
    subject_id: str = "",
    channel: str = "",
) -> WindowBatch:
    """Overlapping windows; window k covers samples [k*shift*fs, k*shift*fs + len*fs).

    Raises:
        DataError: signal shorter than one window
    """
    x = np.asarray(signal, dtype=np.float64)
    size, step = len_s * fs, shift_s * fs
    if x.shape[0] < size:
        raise DataError(
            f"signal of {x.shape[0]} samples is shorter than one {len_s} s window",
            details={"subject_id": subject_id, "channel": channel, "samples": x.shape[0], "window": size},
        )
    windows = sliding_window_view(x, size)[::step].copy()
    return WindowBatch(
        windows=windows,
        subject_id=subject_id,
        channel=channel,
        start_s=np.arange(windows.shape[0]) * shift_s,
    )


def standardize_windows(windows: np.ndarray, floor: float = VARIANCE_FLOOR) -> np.ndarray:
    """Zero mean, unit variance per row; near-constant rows are only centred."""
    w = np.asarray(windows, dtype=np.float64)
    centred = w - w.mean(axis=-1, keepdims=True)
    var = centred.var(axis=-1, keepdims=True)
    return centred / np.sqrt(np.maximum(var, floor))


def preprocess_channel(samples: np.ndarray, fs: float, cfg: PreprocessConfig, subject_id: str, channel: str) -> WindowBatch:
    filtered = bandpass(samples, fs, cfg.filter)
    low = decimate(filtered, fs, cfg.target_rate_hz)
    batch = window(low, cfg.target_rate_hz, cfg.window_s, cfg.shift_s, subject_id, channel)
    if cfg.standardize:
        batch.windows = standardize_windows(batch.windows)
    return batch


def preprocess(rec: EegRecording, cfg: PreprocessConfig = PreprocessConfig(), max_workers: int = 1) -> list[WindowBatch]:
    """Filter, decimate and window every channel, in channel order.

    Raises:
        ConfigurationError: sample rate below 64 Hz or not a multiple of the target rate
    """
    if rec.sample_rate_hz < 2 * cfg.target_rate_hz:
        raise ConfigurationError(
            f"recording sampled at {rec.sample_rate_hz:g} Hz; at least {2 * cfg.target_rate_hz} Hz required",
            details={"subject_id": rec.subject_id, "fs": rec.sample_rate_hz},
        )

    def run(i: int) -> WindowBatch:
        return preprocess_channel(rec.samples[i], rec.sample_rate_hz, cfg, rec.subject_id, rec.channel_names[i])

    if max_workers <= 1:
        return [run(i) for i in range(rec.n_channels)]
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        return list(pool.map(run, range(rec.n_channels)))

"""Pytest fixtures and configuration.

Provides small synthetic subjects shared by the dsp, pipeline and CLI tests.
Anything that trains a network is marked ``slow``.
"""
import sys
from pathlib import Path

import numpy as np
import pytest

ROOT = Path(__file__).resolve().parents[1]
SRC = ROOT / "src"
if str(SRC) not in sys.path:
    sys.path.insert(0, str(SRC))


@pytest.fixture(scope="session")
def small_synth_cfg():
    """Ten-minute, two-channel subjects with two one-minute seizures each."""
    from seizure_cnn.config import SynthConfig

    return SynthConfig(duration_s=600.0, n_channels=2, seizure_event_count=2, seizure_duration_s=60)


@pytest.fixture(scope="session")
def small_cohort(small_synth_cfg):
    """Four synthetic subjects as (EegRecording, LabelTrack) pairs."""
    from seizure_cnn.eegio.synth import synth_cohort

    return synth_cohort(4, small_synth_cfg, master_seed=7)


@pytest.fixture(scope="session")
def prepared_cohort(small_cohort):
    from seizure_cnn.evaluation.pipeline import prepare_subject

    return [prepare_subject(rec, track) for rec, track in small_cohort]


@pytest.fixture
def rng():
    return np.random.Generator(np.random.PCG64(1234))

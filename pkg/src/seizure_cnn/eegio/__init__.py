"""Recordings, labels, synthetic subjects and model files."""
from .models import load_model, save_model
from .recording import EegRecording, LabelTrack, read_labels, read_recording, write_labels, write_recording
from .synth import synth_cohort, synth_subject

__all__ = [
    "EegRecording",
    "LabelTrack",
    "load_model",
    "read_labels",
    "read_recording",
    "save_model",
    "synth_cohort",
    "synth_subject",
    "write_labels",
    "write_recording",
]

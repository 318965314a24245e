"""Tests for recording, label and model files plus the synthetic generator.

This test suite validates that:
1. Recordings and labels survive a write/read cycle bit-exactly
2. Malformed files raise DataError with the offending path
3. The generator is a pure function of its seed
4. Saved models reload with identical parameters and predictions
"""
import json

import numpy as np
import pytest

from seizure_cnn.arch import assemble, build_cnn6
from seizure_cnn.config import SynthConfig
from seizure_cnn.eegio.models import load_model, model_paths, read_manifest, save_model
from seizure_cnn.eegio.recording import (
    EegRecording,
    LabelTrack,
    read_header,
    read_labels,
    read_recording,
    write_labels,
    write_recording,
)
from seizure_cnn.eegio.synth import EVENT_MARGIN_S, plan_events, subject_ids, synth_cohort, synth_subject
from seizure_cnn.errors import ConfigurationError, DataError
from seizure_cnn.nncore.network import Network
from seizure_cnn.shallow import BaselineModel, train_baseline


class TestRecordingFiles:
    def test_write_then_read(self, tmp_path, rng):
        rec = EegRecording("s01", 256.0, ["F4-C4", "C4-O2"], rng.standard_normal((2, 1024)).astype(np.float32))
        eeg_path, json_path = write_recording(rec, tmp_path / "s01")

        assert eeg_path.stat().st_size == 2 * 1024 * 4
        header = read_header(json_path)
        assert (header.n_channels, header.n_samples) == (2, 1024)
        back = read_recording(eeg_path)
        np.testing.assert_array_equal(back.samples, rec.samples)
        assert back.channel_names == rec.channel_names

    def test_payload_size_mismatch(self, tmp_path, rng):
        rec = EegRecording("s01", 256.0, ["C3-O1"], rng.standard_normal((1, 100)).astype(np.float32))
        eeg_path, _ = write_recording(rec, tmp_path / "s01")
        eeg_path.write_bytes(eeg_path.read_bytes()[:-4])
        with pytest.raises(DataError) as exc:
            read_recording(eeg_path)
        assert exc.value.exit_code == 2

    def test_sidecar_with_wrong_channel_names(self, tmp_path, rng):
        rec = EegRecording("s01", 256.0, ["C3-O1"], np.zeros((1, 10), dtype=np.float32))
        _, json_path = write_recording(rec, tmp_path / "s01")
        header = json.loads(json_path.read_text())
        header["channel_names"] = ["a", "b"]
        json_path.write_text(json.dumps(header))
        with pytest.raises(DataError):
            read_recording(json_path)

    def test_channel_count_mismatch_in_memory(self):
        with pytest.raises(DataError):
            EegRecording("s", 256.0, ["a"], np.zeros((2, 10)))

    def test_write_under_regular_file(self, tmp_path):
        (tmp_path / "plain").write_text("")
        rec = EegRecording("s01", 256.0, ["C3-O1"], np.zeros((1, 10), dtype=np.float32))
        with pytest.raises(DataError) as exc:
            write_recording(rec, tmp_path / "plain" / "s01")
        assert exc.value.details["path"] == str(tmp_path / "plain" / "s01.eeg")
        with pytest.raises(DataError):
            write_labels(LabelTrack("s01", np.zeros(5, dtype=np.int8)), tmp_path / "plain" / "s01.csv")


class TestLabelFiles:
    def test_write_then_read(self, tmp_path):
        track = LabelTrack("s01", np.array([0, 0, 1, 1, 0]))
        path = write_labels(track, tmp_path / "s01.csv")
        assert path.read_text().splitlines()[0] == "second,label"
        back = read_labels(path)
        np.testing.assert_array_equal(back.labels, track.labels)
        assert back.subject_id == "s01"

    def test_non_binary_label(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("second,label\n0,0\n1,2\n")
        with pytest.raises(DataError):
            read_labels(path)

    def test_gap_in_seconds(self, tmp_path):
        path = tmp_path / "gap.csv"
        path.write_text("second,label\n0,0\n2,1\n")
        with pytest.raises(DataError):
            read_labels(path)

    def test_wrong_header(self, tmp_path):
        path = tmp_path / "hdr.csv"
        path.write_text("t,y\n0,0\n")
        with pytest.raises(DataError):
            read_labels(path)


class TestSynth:
    def test_same_seed_same_subject(self):
        cfg = SynthConfig(duration_s=300.0, n_channels=2, seizure_event_count=1, seed=9)
        a, la = synth_subject(cfg)
        b, lb = synth_subject(cfg)
        np.testing.assert_array_equal(a.samples, b.samples)
        np.testing.assert_array_equal(la.labels, lb.labels)

    def test_different_seed_differs(self):
        cfg = SynthConfig(duration_s=300.0, n_channels=1, seizure_event_count=1)
        a, _ = synth_subject(cfg.model_copy(update={"seed": 1}))
        b, _ = synth_subject(cfg.model_copy(update={"seed": 2}))
        assert not np.array_equal(a.samples, b.samples)

    def test_labels_mark_event_seconds(self, small_cohort, small_synth_cfg):
        for rec, track in small_cohort:
            assert len(track) == 600
            assert track.seizure_seconds == 2 * 60
            assert rec.samples.shape == (2, 600 * 256)
            assert track.labels[:EVENT_MARGIN_S].sum() == 0

    def test_seizures_raise_low_band_power(self, small_cohort):
        for rec, track in small_cohort:
            fs = int(rec.sample_rate_hz)
            seconds = rec.samples[:, : len(track) * fs].astype(np.float64).reshape(rec.n_channels, len(track), fs)
            # one-second spectra: bin k is k Hz
            band = (np.abs(np.fft.rfft(seconds, axis=2))[:, :, 1:5] ** 2).sum(axis=2).mean(axis=0)
            assert band[track.labels == 1].mean() > 1.5 * band[track.labels == 0].mean()

    def test_events_do_not_fit(self):
        cfg = SynthConfig(duration_s=120.0, seizure_event_count=3, seizure_duration_s=60)
        with pytest.raises(ConfigurationError):
            plan_events(cfg, np.random.Generator(np.random.PCG64(0)))

    def test_events_keep_margin(self):
        cfg = SynthConfig(duration_s=1200.0, seizure_event_count=5, seizure_duration_s=60)
        events = plan_events(cfg, np.random.Generator(np.random.PCG64(3)))
        assert events[0].start_s >= EVENT_MARGIN_S
        for a, b in zip(events, events[1:]):
            assert b.start_s - a.end_s >= EVENT_MARGIN_S
        assert events[-1].end_s <= 1200 - EVENT_MARGIN_S

    def test_invalid_settings_are_configuration_errors(self):
        with pytest.raises(ConfigurationError) as exc:
            synth_subject({"duration_s": 10})
        assert exc.value.details["errors"][0]["loc"] == ("duration_s",)
        with pytest.raises(ConfigurationError):
            synth_cohort(2, SynthConfig().model_copy(update={"n_channels": 0}), master_seed=0)

    def test_mapping_settings(self):
        a, _ = synth_subject({"duration_s": 120.0, "n_channels": 1, "seizure_event_count": 0, "seed": 5})
        b, _ = synth_subject(SynthConfig(duration_s=120.0, n_channels=1, seizure_event_count=0, seed=5))
        np.testing.assert_array_equal(a.samples, b.samples)

    def test_cohort_subject_seed_independent_of_size(self):
        cfg = SynthConfig(duration_s=300.0, n_channels=1, seizure_event_count=1)
        three = synth_cohort(3, cfg, master_seed=4)
        two = synth_cohort(2, cfg, master_seed=4)
        np.testing.assert_array_equal(three[1][0].samples, two[1][0].samples)
        assert [rec.subject_id for rec, _ in three] == subject_ids(3)


class TestModelFiles:
    def test_cnn_round_trip(self, tmp_path, rng):
        net = assemble(build_cnn6(), seed=5)
        net.best_epoch = 7
        manifest_path, weights_path = save_model(net, tmp_path / "cnn6")

        assert weights_path.stat().st_size == 4 * 17058
        back = load_model(manifest_path)
        assert isinstance(back, Network)
        assert back.best_epoch == 7
        for a, b in zip(net.snapshot(), back.snapshot()):
            np.testing.assert_array_equal(a, b)
        windows = rng.standard_normal((4, 256))
        np.testing.assert_array_equal(net.predict_proba(windows), back.predict_proba(windows))

    def test_baseline_round_trip(self, tmp_path, rng):
        x = rng.standard_normal((200, 8))
        y = (x[:, 0] > 0).astype(int)
        model = train_baseline(x, y)
        save_model(model, tmp_path / "baseline")

        back = load_model(tmp_path / "baseline.manifest.json")
        assert isinstance(back, BaselineModel)
        np.testing.assert_array_equal(back.weights, model.weights)
        assert back.bias == model.bias
        np.testing.assert_array_equal(back.predict_features(x), model.predict_features(x))

    def test_tampered_weights_detected(self, tmp_path):
        save_model(assemble(build_cnn6(), seed=1), tmp_path / "m")
        _, weights_path = model_paths(tmp_path / "m")
        blob = bytearray(weights_path.read_bytes())
        blob[0] ^= 0xFF
        weights_path.write_bytes(bytes(blob))
        with pytest.raises(DataError):
            load_model(tmp_path / "m")

    def test_truncated_weights_detected(self, tmp_path):
        save_model(assemble(build_cnn6(), seed=1), tmp_path / "m")
        _, weights_path = model_paths(tmp_path / "m")
        weights_path.write_bytes(weights_path.read_bytes()[:-8])
        with pytest.raises(DataError):
            load_model(tmp_path / "m")

    def test_manifest_lists_blob_layout(self, tmp_path):
        save_model(assemble(build_cnn6(), seed=1), tmp_path / "m")
        manifest = read_manifest(tmp_path / "m")
        assert manifest.kind == "cnn"
        assert manifest.dtype == "float32-le"
        assert sum(p.size for p in manifest.parameters) == 17058

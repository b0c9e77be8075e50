"""Windowing, synthesis, artifact injection, and the corpus file format."""

import numpy as np
import pytest

from it2sqa.errors import CorpusFormatError
from it2sqa.signal import (
    ClassLabel,
    PulseMorphology,
    build_synthetic_study,
    inject_artifact,
    read_corpus_csv,
    read_signal_csv,
    segment_windows,
    synth_clean_ppg,
    write_corpus_csv,
    _draw_subject_params,
)

PERIODIC = PulseMorphology(interval_jitter=0.0, amplitude_jitter=0.0)


class TestSegmentWindows:
    def test_exact_division(self):
        windows = segment_windows(np.zeros(1800), fs=200.0, window_seconds=3.0)
        assert len(windows) == 3
        assert all(len(w.samples) == 600 for w in windows)
        assert [w.window_index for w in windows] == [0, 1, 2]

    def test_shorter_than_one_window(self):
        assert segment_windows(np.zeros(599), fs=200.0, window_seconds=3.0) == []

    def test_trailing_partial_discarded(self):
        # floor-division oracle: 1900 // 600 windows, remainder dropped
        signal = np.arange(1900, dtype=float)
        windows = segment_windows(signal, fs=200.0, window_seconds=3.0)
        assert len(windows) == 1900 // 600 == 3
        kept = sum(len(w.samples) for w in windows)
        assert 1900 - kept == 100

    def test_partition_property(self):
        rng = np.random.default_rng(0)
        signal = rng.normal(size=2123)
        windows = segment_windows(signal, fs=200.0, window_seconds=3.0)
        stitched = np.concatenate([w.samples for w in windows])
        assert np.array_equal(stitched, signal[: len(stitched)])

    def test_nonfinite_rejected_with_index(self):
        signal = np.zeros(700)
        signal[123] = np.nan
        with pytest.raises(ValueError, match="index 123"):
            segment_windows(signal, fs=200.0, window_seconds=3.0)

    def test_bad_args(self):
        with pytest.raises(ValueError):
            segment_windows(np.zeros(10), fs=0.0)
        with pytest.raises(ValueError):
            segment_windows(np.zeros(10), fs=200.0, window_seconds=-1.0)


class TestSynthCleanPpg:
    def test_deterministic(self):
        a = synth_clean_ppg(72, 5.0, 200.0, seed=42)
        b = synth_clean_ppg(72, 5.0, 200.0, seed=42)
        assert np.array_equal(a, b)
        c = synth_clean_ppg(72, 5.0, 200.0, seed=43)
        assert not np.array_equal(a, c)

    def test_sample_count_and_peak_count(self):
        # peak-count oracle: local maxima above half the global maximum
        x = synth_clean_ppg(60, 3.0, 200.0, PERIODIC, seed=1)
        assert len(x) == 600
        peaks = [
            i for i in range(1, len(x) - 1)
            if x[i] > x[i - 1] and x[i] > x[i + 1] and x[i] > 0.5 * x.max()
        ]
        assert len(peaks) == 3

    def test_zero_jitter_periodicity(self):
        # autocorrelation oracle: dominant lag at fs * 60 / hr samples
        x = synth_clean_ppg(60, 10.0, 200.0, PERIODIC, seed=1)
        centered = x - x.mean()
        ac = np.correlate(centered, centered, mode="full")[len(x) - 1 :]
        lag = int(np.argmax(ac[100:600])) + 100
        assert lag == 200

    def test_heart_rate_bounds(self):
        with pytest.raises(ValueError):
            synth_clean_ppg(20, 3.0, 200.0)
        with pytest.raises(ValueError):
            synth_clean_ppg(250, 3.0, 200.0)

    def test_all_finite(self):
        x = synth_clean_ppg(180, 4.0, 100.0, seed=9)
        assert np.all(np.isfinite(x))


class TestInjectArtifact:
    def setup_method(self):
        self.signal = synth_clean_ppg(70, 9.0, 200.0, seed=5)

    def test_severity_zero_is_identity(self):
        out, mask = inject_artifact(self.signal, "spike", 0.0, (100, 300), seed=1)
        assert np.array_equal(out, self.signal)
        assert mask == set()

    def test_mask_containment(self):
        _, mask = inject_artifact(self.signal[:1800], "spike", 1.0, (0, 11), seed=1)
        assert mask == {0}

    def test_mask_spanning_windows(self):
        _, mask = inject_artifact(self.signal, "baseline_wander", 0.5, (550, 1300), seed=1)
        assert mask == {0, 1, 2}

    def test_noise_burst_raises_variance(self):
        # variance-comparison oracle over the affected window
        span = (600, 1200)
        out, mask = inject_artifact(self.signal, "noise_burst", 1.0, span, seed=3)
        assert mask == {1}
        assert np.var(out[600:1200]) > np.var(self.signal[600:1200])

    def test_unknown_kind_rejected(self):
        with pytest.raises(ValueError, match="unknown artifact kind"):
            inject_artifact(self.signal, "glitch", 0.5, (0, 100), seed=1)

    def test_span_bounds_checked(self):
        with pytest.raises(ValueError):
            inject_artifact(self.signal, "spike", 0.5, (-1, 100), seed=1)
        with pytest.raises(ValueError):
            inject_artifact(self.signal, "spike", 0.5, (0, len(self.signal) + 1), seed=1)

    def test_deterministic(self):
        a, _ = inject_artifact(self.signal, "noise_burst", 0.8, (0, 600), seed=7)
        b, _ = inject_artifact(self.signal, "noise_burst", 0.8, (0, 600), seed=7)
        assert np.array_equal(a, b)

    def test_untouched_samples_unchanged(self):
        out, _ = inject_artifact(self.signal, "dropout", 0.9, (600, 1200), seed=7)
        assert np.array_equal(out[:600], self.signal[:600])
        assert np.array_equal(out[1200:], self.signal[1200:])


class TestBuildSyntheticStudy:
    def test_shape_and_class_balance(self):
        study = build_synthetic_study(10, 33, 0.19, 0.25, seed=7)
        assert len(study) == 10
        total = sum(len(c.windows) for c in study)
        noisy = sum(
            1 for c in study for w in c.windows if w.label is ClassLabel.NOISY
        )
        assert total == 330
        # per-subject proportion within one window of the request
        for corpus in study:
            n = sum(1 for w in corpus.windows if w.label is ClassLabel.NOISY)
            assert abs(n - 33 * 0.19) <= 1.0
        # global split lands near the 269/62 reference scale
        assert abs(noisy - 62) <= 10
        assert abs((total - noisy) - 269) <= 10

    def test_every_window_labelled_and_split(self):
        study = build_synthetic_study(3, 12, 0.25, 0.3, seed=2)
        for corpus in study:
            assert len(corpus.splits) == len(corpus.windows)
            assert all(w.label in (ClassLabel.NOISY, ClassLabel.CLEAN) for w in corpus.windows)
            assert {"train", "validation", "test"} == set(corpus.splits)

    def test_deterministic(self):
        a = build_synthetic_study(3, 12, 0.25, 0.3, seed=9)
        b = build_synthetic_study(3, 12, 0.25, 0.3, seed=9)
        for ca, cb in zip(a, b):
            assert ca.subject_id == cb.subject_id
            assert ca.splits == cb.splits
            for wa, wb in zip(ca.windows, cb.windows):
                assert np.array_equal(wa.samples, wb.samples)
                assert wa.label is wb.label

    def test_zero_shift_collapses_subject_params(self):
        rng_a = np.random.default_rng(1)
        rng_b = np.random.default_rng(2)
        hr_a, morph_a = _draw_subject_params(rng_a, 0.0)
        hr_b, morph_b = _draw_subject_params(rng_b, 0.0)
        assert hr_a == hr_b
        assert morph_a == morph_b

    def test_rejects_fractions_without_positive_class(self):
        with pytest.raises(ValueError, match="noisy"):
            build_synthetic_study(2, 10, 0.05, 0.1, seed=1)

    def test_rejects_bad_args(self):
        with pytest.raises(ValueError):
            build_synthetic_study(0, 10, 0.2, 0.1, seed=1)
        with pytest.raises(ValueError):
            build_synthetic_study(2, 10, 1.5, 0.1, seed=1)


class TestCorpusCsv:
    def test_round_trip_exact(self, tmp_path, tiny_study):
        path = tmp_path / "corpus.csv"
        write_corpus_csv(tiny_study, path)
        loaded = read_corpus_csv(path)
        assert [c.subject_id for c in loaded] == [c.subject_id for c in tiny_study]
        for orig, back in zip(tiny_study, loaded):
            assert orig.splits == back.splits
            for wo, wb in zip(orig.windows, back.windows):
                assert np.array_equal(wo.samples, wb.samples)
                assert wo.label is wb.label
                assert wo.window_index == wb.window_index

    def test_header_mandatory(self, tmp_path):
        path = tmp_path / "corpus.csv"
        path.write_text("s00,0,train,Clean," + ",".join(["0.0"] * 600) + "\n")
        with pytest.raises(CorpusFormatError, match="header"):
            read_corpus_csv(path)

    def test_corrupted_cell_reports_row(self, tmp_path, tiny_study):
        path = tmp_path / "corpus.csv"
        write_corpus_csv(tiny_study, path)
        lines = path.read_text().splitlines()
        parts = lines[3].split(",")
        parts[10] = "not-a-number"
        lines[3] = ",".join(parts)
        path.write_text("\n".join(lines) + "\n")
        with pytest.raises(CorpusFormatError, match="row 4"):
            read_corpus_csv(path)

    def test_wrong_column_count_reports_row(self, tmp_path, tiny_study):
        path = tmp_path / "corpus.csv"
        write_corpus_csv(tiny_study, path)
        lines = path.read_text().splitlines()
        lines[2] = lines[2] + ",0.0"
        path.write_text("\n".join(lines) + "\n")
        with pytest.raises(CorpusFormatError, match="row 3"):
            read_corpus_csv(path)

    def test_bad_split_tag_rejected(self, tmp_path, tiny_study):
        path = tmp_path / "corpus.csv"
        write_corpus_csv(tiny_study, path)
        lines = path.read_text().splitlines()
        parts = lines[1].split(",")
        parts[2] = "holdout"
        lines[1] = ",".join(parts)
        path.write_text("\n".join(lines) + "\n")
        with pytest.raises(CorpusFormatError, match="row 2"):
            read_corpus_csv(path)


class TestReadSignalCsv:
    def test_round_trip(self, tmp_path):
        path = tmp_path / "raw.csv"
        values = np.random.default_rng(3).normal(size=100)
        path.write_text("\n".join(repr(float(v)) for v in values) + "\n")
        loaded = read_signal_csv(path)
        assert np.array_equal(loaded, values)

    def test_bad_line_reports_row(self, tmp_path):
        path = tmp_path / "raw.csv"
        path.write_text("1.0\n2.0\noops\n4.0\n")
        with pytest.raises(CorpusFormatError, match="row 3"):
            read_signal_csv(path)

    def test_empty_file_rejected(self, tmp_path):
        path = tmp_path / "raw.csv"
        path.write_text("")
        with pytest.raises(CorpusFormatError):
            read_signal_csv(path)

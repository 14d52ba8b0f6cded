import numpy as np
import pytest

from sstbench.audio import AudioClip
from sstbench.errors import ConfigError, ShortUtteranceError
from sstbench.frontend import (
    FeatureStore,
    FrontendConfig,
    Spectrogram,
    build_mel_filterbank,
    mel_center_frequencies,
    mel_spectrogram,
    stft_spectrogram,
)


def clip_of(samples, sr=16000):
    return AudioClip(np.asarray(samples, dtype=np.float64), sr)


def white_clip(duration=1.0, sr=16000, seed=0, amp=0.3):
    rng = np.random.default_rng(seed)
    return clip_of(amp * rng.standard_normal(int(duration * sr)), sr)


class TestConfig:
    def test_window_exceeds_nfft(self):
        with pytest.raises(ConfigError):
            FrontendConfig(win_length=0.040, n_fft=512)  # 640 > 512

    def test_bad_band(self):
        with pytest.raises(ConfigError):
            FrontendConfig(fmin=4000, fmax=1000)
        with pytest.raises(ConfigError):
            FrontendConfig(fmax=9000)  # above Nyquist

    def test_bad_floor(self):
        with pytest.raises(ConfigError):
            FrontendConfig(log_floor=0.0)


class TestFilterbank:
    def test_single_filter_spans_band(self):
        cfg = FrontendConfig(n_mels=1, fmin=0, fmax=8000)
        fb = build_mel_filterbank(cfg)
        assert fb.shape == (1, 257)
        assert fb.max() == pytest.approx(1.0)
        # Rises then falls: one interior peak.
        peak = fb[0].argmax()
        assert 0 < peak < 256

    def test_every_filter_peaks_at_one(self):
        fb = build_mel_filterbank(FrontendConfig())
        np.testing.assert_allclose(fb.max(axis=1), 1.0)

    def test_band_coverage(self):
        cfg = FrontendConfig(n_mels=40, fmin=0, fmax=8000)
        fb = build_mel_filterbank(cfg)
        bin_hz = np.arange(257) * 16000 / 512
        interior = (bin_hz > cfg.fmin) & (bin_hz < cfg.fmax)
        covered = (fb > 0).any(axis=0)
        assert covered[interior].all()

    def test_centers_match_independent_mel_formula(self):
        # Oracle: mel(f) = 2595 log10(1 + f/700), centers equally spaced in mel.
        cfg = FrontendConfig(n_fft=512, sample_rate=16000, n_mels=40)
        centers = mel_center_frequencies(cfg)
        assert np.all(np.diff(centers) > 0)
        mel = 2595.0 * np.log10(1.0 + centers / 700.0)
        spacing = np.diff(mel)
        np.testing.assert_allclose(spacing, spacing[0], rtol=1e-9)
        lo = 2595.0 * np.log10(1.0 + cfg.fmin / 700.0)
        hi = 2595.0 * np.log10(1.0 + cfg.fmax / 700.0)
        np.testing.assert_allclose(mel[0], lo + (hi - lo) / 41, rtol=1e-9)
        # Each filter's strongest bin sits within one bin of its center.
        fb = build_mel_filterbank(cfg)
        bin_width = 16000 / 512
        argmax_hz = fb.argmax(axis=1) * bin_width
        assert np.max(np.abs(argmax_hz - centers)) <= bin_width

    def test_collision_error(self):
        with pytest.raises(ConfigError):
            build_mel_filterbank(FrontendConfig(n_mels=200, n_fft=512))


class TestMelSpectrogram:
    def test_silence_hits_floor_then_normalizes_to_zero(self):
        cfg = FrontendConfig(normalization="none")
        spec = mel_spectrogram(clip_of(np.zeros(16000)), cfg)
        np.testing.assert_allclose(spec.data, np.log(cfg.log_floor))
        cfg_norm = FrontendConfig(normalization="per-utterance-meanvar")
        spec_norm = mel_spectrogram(clip_of(np.zeros(16000)), cfg_norm)
        np.testing.assert_allclose(spec_norm.data, 0.0)

    def test_frame_count_formula(self):
        spec = mel_spectrogram(white_clip(1.0), FrontendConfig())
        assert spec.n_frames == (16000 - 400) // 160 + 1 == 98
        for n in (400, 401, 559, 560, 561, 1000):
            spec = mel_spectrogram(white_clip(n / 16000), FrontendConfig())
            assert spec.n_frames == (n - 400) // 160 + 1

    def test_too_short(self):
        with pytest.raises(ShortUtteranceError):
            mel_spectrogram(clip_of(np.zeros(399)), FrontendConfig())

    def test_sample_rate_mismatch(self):
        with pytest.raises(ConfigError):
            mel_spectrogram(clip_of(np.zeros(8000), sr=8000), FrontendConfig())

    def test_sine_at_center_argmax(self):
        # Oracle: a tone at filter m's center (snapped to an FFT bin) must
        # put the row-argmax at m in every frame, because neighboring
        # triangles are zero at that bin and leakage is Hann-limited.
        cfg = FrontendConfig(normalization="none")
        centers = mel_center_frequencies(cfg)
        bin_width = cfg.sample_rate / cfg.n_fft
        for m in (10, 20, 30):
            f0 = round(centers[m] / bin_width) * bin_width
            t = np.arange(16000) / 16000
            spec = mel_spectrogram(clip_of(0.5 * np.sin(2 * np.pi * f0 * t)), cfg)
            assert (spec.data.argmax(axis=0) == m).all(), f"filter {m}"

    def test_hop_shift_drops_first_column(self):
        cfg = FrontendConfig(normalization="none")
        clip = white_clip(0.5)
        full = mel_spectrogram(clip, cfg)
        shifted = mel_spectrogram(clip_of(clip.samples[cfg.hop_samples :]), cfg)
        assert shifted.n_frames == full.n_frames - 1
        np.testing.assert_allclose(shifted.data, full.data[:, 1:], atol=1e-5)

    def test_energy_monotonicity(self):
        cfg = FrontendConfig(normalization="none")
        clip = white_clip(0.3)
        base = mel_spectrogram(clip, cfg)
        doubled = mel_spectrogram(clip_of(2.0 * clip.samples), cfg)
        above = base.data > np.log(cfg.log_floor) + 1e-9
        diff = doubled.data[above] - base.data[above]
        np.testing.assert_allclose(diff, np.log(4.0), atol=1e-6)

    def test_meanvar_normalization(self):
        spec = mel_spectrogram(white_clip(1.0), FrontendConfig())
        means = spec.data.mean(axis=1)
        variances = spec.data.var(axis=1)
        assert np.abs(means).max() < 1e-6
        assert np.abs(variances - 1.0).max() < 1e-4

    def test_linear_stft_space(self):
        cfg = FrontendConfig(normalization="none")
        spec = stft_spectrogram(white_clip(0.2), cfg)
        assert spec.n_bins == cfg.n_fft // 2 + 1


class TestFeatureStore:
    def test_dir_round_trip(self, tmp_path):
        cfg = FrontendConfig(normalization="none")
        store = FeatureStore(hop_length=cfg.hop_length)
        spec = mel_spectrogram(white_clip(0.2), cfg)
        spec.utterance_id = "U1"
        store.put(spec)
        store.save_dir(tmp_path / "cache", cfg)
        again = FeatureStore.open_dir(tmp_path / "cache")
        loaded = again.get("U1")
        assert loaded.hop_length == cfg.hop_length
        np.testing.assert_allclose(loaded.data, spec.data.astype(np.float32), rtol=1e-6)

    def test_concat(self):
        store = FeatureStore(hop_length=0.01)
        a = Spectrogram(np.ones((4, 3)), 0.01, "A")
        b = Spectrogram(2 * np.ones((4, 5)), 0.01, "B")
        store.put(a)
        store.put(b)
        combo = store.concat(["A", "B"], "AB")
        assert combo.data.shape == (4, 8)
        np.testing.assert_array_equal(combo.data[:, :3], 1.0)
        np.testing.assert_array_equal(combo.data[:, 3:], 2.0)

    def test_missing_utterance(self):
        with pytest.raises(KeyError):
            FeatureStore().get("nope")

import numpy as np
import pytest
from scipy.io import wavfile

from pararank.audio import (
    MixResult,
    SnrCondition,
    Waveform,
    measure_snr,
    mix_at_snr,
    power,
    random_noise_offset,
    read_wav,
    write_wav,
)
from pararank.errors import AudioError


def sine(freq, fs, n, amp=1.0):
    return Waveform(amp * np.sin(2 * np.pi * freq * np.arange(n) / fs), fs)


class TestWavIO:
    def test_float32_roundtrip_bit_exact(self, tmp_path):
        w = Waveform(np.sin(2 * np.pi * 1000 * np.arange(10000) / 10000).astype(np.float32), 10000)
        path = tmp_path / "tone.wav"
        write_wav(path, w)
        back = read_wav(path)
        assert back.sample_rate == 10000
        assert np.array_equal(back.samples, w.samples)

    def test_pcm16_scale_convention(self, tmp_path):
        path = tmp_path / "edge.wav"
        wavfile.write(path, 8000, np.array([-32768, 0, 16384], dtype=np.int16))
        w = read_wav(path)
        assert w.samples[0] == -1.0
        assert w.samples[1] == 0.0
        assert w.samples[2] == 0.5

    def test_stereo_rejected(self, tmp_path):
        path = tmp_path / "stereo.wav"
        wavfile.write(path, 8000, np.zeros((100, 2), dtype=np.int16))
        with pytest.raises(AudioError, match="mono required"):
            read_wav(path)

    def test_malformed_rejected(self, tmp_path):
        path = tmp_path / "junk.wav"
        path.write_bytes(b"not a riff file")
        with pytest.raises(AudioError):
            read_wav(path)

    def test_unsupported_encoding_rejected(self, tmp_path):
        path = tmp_path / "i32.wav"
        wavfile.write(path, 8000, np.zeros(100, dtype=np.int32))
        with pytest.raises(AudioError, match="unsupported encoding"):
            read_wav(path)

    def test_waveform_invariants(self):
        with pytest.raises(AudioError):
            Waveform(np.array([np.nan]), 8000)
        with pytest.raises(AudioError):
            Waveform(np.zeros((2, 10)), 8000)
        with pytest.raises(AudioError):
            Waveform(np.zeros(10), 0)
        with pytest.raises(AudioError):
            SnrCondition(float("inf"))


class TestPower:
    def test_zeros(self):
        assert power(Waveform(np.zeros(100), 8000)) == 0.0

    def test_constant_half(self):
        assert power(Waveform(np.full(100, 0.5), 8000)) == pytest.approx(0.25)

    def test_unit_sine_whole_periods(self):
        # mean of sin^2 over whole periods is exactly 1/2
        w = sine(100, 8000, 8000)
        assert power(w) == pytest.approx(0.5, abs=1e-12)

    def test_empty_rejected(self):
        with pytest.raises(AudioError):
            power(Waveform(np.array([]), 8000))


class TestMeasureSnr:
    def test_equal_signals_zero_db(self):
        w = sine(100, 8000, 800, 0.5)
        assert measure_snr(w, w) == pytest.approx(0.0, abs=1e-12)

    def test_ten_to_one_amplitude_is_20db(self):
        s = sine(100, 8000, 800, 0.5)
        n = Waveform(s.samples / 10.0, 8000)
        assert measure_snr(s, n) == pytest.approx(20.0, abs=1e-9)

    def test_ratio_invariance(self):
        rng = np.random.default_rng(3)
        s = Waveform(rng.standard_normal(500) * 0.1, 8000)
        n = Waveform(rng.standard_normal(500) * 0.03, 8000)
        base = measure_snr(s, n)
        scaled = measure_snr(Waveform(s.samples * 0.37, 8000), Waveform(n.samples * 0.37, 8000))
        assert scaled == pytest.approx(base, abs=1e-9)

    def test_zero_power_rejected(self):
        s = sine(100, 8000, 800)
        with pytest.raises(AudioError):
            measure_snr(s, Waveform(np.zeros(800), 8000))


class TestMixAtSnr:
    def test_equal_powers_at_zero_db_gives_unit_scale(self):
        s = Waveform(np.full(1000, 0.5), 8000)
        n = Waveform(np.tile([0.5, -0.5], 500), 8000)
        result = mix_at_snr(s, n, 0.0)
        assert result.noise_scale == pytest.approx(1.0, abs=1e-12)

    def test_snr_roundtrip_100_seeded_pairs(self):
        rng = np.random.default_rng(42)
        for _ in range(100):
            n = int(rng.integers(400, 2000))
            s = Waveform(rng.standard_normal(n) * rng.uniform(0.05, 0.3), 8000)
            noise = Waveform(rng.standard_normal(int(rng.integers(300, 3000))) * 0.2, 8000)
            target = float(rng.uniform(-10, 10))
            offset = int(rng.integers(0, len(noise)))
            result = mix_at_snr(s, noise, target, offset)
            idx = (offset + np.arange(n)) % len(noise)
            seg = Waveform(noise.samples[idx] * result.noise_scale * result.post_gain, 8000)
            speech = Waveform(s.samples * result.post_gain, 8000)
            assert measure_snr(speech, seg) == pytest.approx(target, abs=1e-6)

    def test_monotone_noise_scale_across_grid(self):
        rng = np.random.default_rng(5)
        s = Waveform(rng.standard_normal(1000) * 0.1, 8000)
        noise = Waveform(rng.standard_normal(1000) * 0.1, 8000)
        scales = [mix_at_snr(s, noise, snr).noise_scale for snr in (5.0, 0.0, -5.0)]
        assert scales[0] < scales[1] < scales[2]

    def test_linearity_in_speech_with_fixed_scale(self):
        rng = np.random.default_rng(9)
        s = Waveform(rng.standard_normal(500) * 0.1, 8000)
        noise = Waveform(rng.standard_normal(500) * 0.1, 8000)
        result = mix_at_snr(s, noise, 3.0, 0)
        manual = s.samples + result.noise_scale * noise.samples
        assert np.allclose(result.waveform.samples, manual * result.post_gain)
        assert len(result.waveform) == len(s)

    def test_deterministic_given_offset(self):
        rng = np.random.default_rng(13)
        s = Waveform(rng.standard_normal(500) * 0.1, 8000)
        noise = Waveform(rng.standard_normal(2000) * 0.1, 8000)
        a = mix_at_snr(s, noise, -5.0, 123)
        b = mix_at_snr(s, noise, -5.0, 123)
        assert np.array_equal(a.waveform.samples, b.waveform.samples)

    def test_cyclic_wrap(self):
        s = Waveform(np.full(10, 0.5), 8000)
        noise = Waveform(np.array([0.5, -0.5, 0.25]), 8000)
        result = mix_at_snr(s, noise, 0.0, 2)
        idx = (2 + np.arange(10)) % 3
        expected = s.samples + result.noise_scale * noise.samples[idx]
        assert np.allclose(result.waveform.samples, expected * result.post_gain)

    def test_peak_normalization_instead_of_clipping(self):
        s = Waveform(np.full(100, 0.9), 8000)
        noise = Waveform(np.full(100, 0.9), 8000)
        result = mix_at_snr(s, noise, 0.0)
        assert result.post_gain < 1.0
        assert np.max(np.abs(result.waveform.samples)) <= 1.0 + 1e-12

    def test_silent_inputs_rejected(self):
        s = Waveform(np.zeros(100), 8000)
        noise = Waveform(np.ones(100) * 0.1, 8000)
        with pytest.raises(AudioError, match="silent speech"):
            mix_at_snr(s, noise, 0.0)
        with pytest.raises(AudioError, match="silent noise"):
            mix_at_snr(noise, s, 0.0)

    def test_rate_mismatch_rejected(self):
        s = Waveform(np.ones(100) * 0.1, 8000)
        n = Waveform(np.ones(100) * 0.1, 16000)
        with pytest.raises(AudioError, match="sample-rate mismatch"):
            mix_at_snr(s, n, 0.0)

    def test_snr_condition_accepted(self):
        s = Waveform(np.full(100, 0.5), 8000)
        n = Waveform(np.tile([0.5, -0.5], 50), 8000)
        assert isinstance(mix_at_snr(s, n, SnrCondition(0.0)), MixResult)

    def test_random_offset_seeded(self):
        rng = np.random.default_rng(21)
        a = random_noise_offset(1000, np.random.default_rng(5))
        b = random_noise_offset(1000, np.random.default_rng(5))
        assert a == b
        assert 0 <= a < 1000

import struct
import wave

import numpy as np
import pytest

from hdspeaker import dsp


def direct_dft(x):
    """O(n^2) DFT by explicit summation."""
    n = len(x)
    k = np.arange(n)
    return np.array([np.sum(x * np.exp(-2j * np.pi * f * k / n)) for f in range(n)])


def oracle_power(frame):
    w = 0.5 * (1 - np.cos(2 * np.pi * np.arange(80) / 80))
    return np.abs(direct_dft(frame * w)) ** 2


def write_wav(path, data: bytes, channels=1, width=2, rate=16000):
    with wave.open(str(path), "wb") as wf:
        wf.setnchannels(channels)
        wf.setsampwidth(width)
        wf.setframerate(rate)
        wf.writeframes(data)


class TestLoadWav:
    def test_one_second(self, tmp_path):
        p = tmp_path / "a.wav"
        write_wav(p, np.zeros(16000, "<i2").tobytes())
        clip = dsp.load_wav(p)
        assert len(clip.samples) == 16000
        assert clip.sample_rate == 16000
        assert clip.duration == 1.0

    def test_scaling(self, tmp_path):
        p = tmp_path / "a.wav"
        write_wav(p, np.array([-32768, 0, 16384, 32767], "<i2").tobytes())
        assert dsp.load_wav(p).samples.tolist() == [-1.0, 0.0, 0.5, 32767 / 32768]

    def test_wrong_rate(self, tmp_path):
        p = tmp_path / "a.wav"
        write_wav(p, np.zeros(100, "<i2").tobytes(), rate=44100)
        with pytest.raises(dsp.UnsupportedSampleRateError, match="44100"):
            dsp.load_wav(p)

    def test_stereo(self, tmp_path):
        p = tmp_path / "a.wav"
        write_wav(p, np.zeros(200, "<i2").tobytes(), channels=2)
        with pytest.raises(dsp.MultiChannelError):
            dsp.load_wav(p)

    def test_8bit(self, tmp_path):
        p = tmp_path / "a.wav"
        write_wav(p, bytes(100), width=1)
        with pytest.raises(dsp.UnsupportedCodecError):
            dsp.load_wav(p)

    def test_float_codec(self, tmp_path):
        p = tmp_path / "a.wav"
        data = np.zeros(10, "<f4").tobytes()
        fmt = struct.pack("<HHIIHH", 3, 1, 16000, 64000, 4, 32)
        body = b"WAVE" + b"fmt " + struct.pack("<I", len(fmt)) + fmt + b"data" + struct.pack("<I", len(data)) + data
        p.write_bytes(b"RIFF" + struct.pack("<I", len(body)) + body)
        with pytest.raises(dsp.UnsupportedCodecError):
            dsp.load_wav(p)

    def test_not_wav(self, tmp_path):
        p = tmp_path / "a.wav"
        p.write_bytes(b"hello world, definitely not audio")
        with pytest.raises(dsp.NotWavError):
            dsp.load_wav(p)

    def test_save_roundtrip(self, tmp_path):
        x = np.array([0.0, 0.25, -0.5, -1.0])
        dsp.save_wav(tmp_path / "r.wav", x)
        assert dsp.load_wav(tmp_path / "r.wav").samples.tolist() == x.tolist()


class TestFraming:
    @pytest.mark.parametrize("n, frames", [(16000, 50), (80, 1), (79, 0), (400, 2), (399, 1)])
    def test_counts(self, n, frames):
        assert len(dsp.frame_stream(np.zeros(n))) == frames

    def test_alignment(self):
        x = np.arange(16000, dtype=float)
        f = dsp.frame_stream(x)
        starts = f[:, 0]
        assert np.all(np.diff(starts) == 320)
        # 320 samples at 16 kHz is exactly 20 ms
        assert np.allclose(np.diff(starts) / 16000, 0.020)
        assert f[3].tolist() == list(range(960, 1040))


class TestPowerSpectrum:
    def test_zero_frame(self):
        s = dsp.power_spectrum(np.zeros(80))
        assert np.all(s.bins == 0) and s.energy == 0

    def test_matches_direct_dft(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            frame = rng.standard_normal(80)
            ref = oracle_power(frame)[:40]
            got = dsp.power_spectrum(frame).bins
            assert np.max(np.abs(got - ref) / np.maximum(ref, 1e-300)) < 1e-9

    def test_tone_peaks_at_bin_5(self):
        frame = np.cos(2 * np.pi * 1000 * np.arange(80) / 16000)
        s = dsp.power_spectrum(frame)
        assert int(np.argmax(s.bins)) == 5
        # On-bin tone through a periodic Hann: |X_5| = 80/2 * 0.5 = 20
        assert s.bins[5] == pytest.approx(oracle_power(frame)[5], rel=1e-12)
        assert s.bins[5] == pytest.approx(400.0, rel=1e-12)

    def test_scale_covariance(self):
        frame = np.random.default_rng(1).standard_normal(80)
        base = dsp.power_spectrum(frame).bins
        for c in (0.01, 3.0, 100.0):
            np.testing.assert_allclose(dsp.power_spectrum(c * frame).bins, c**2 * base, rtol=1e-12)

    def test_parseval(self):
        rng = np.random.default_rng(2)
        for _ in range(10):
            frame = rng.standard_normal(80)
            full = oracle_power(frame)
            bins = dsp.power_spectrum(frame).bins
            one_sided = bins[0] + 2 * bins[1:].sum() + full[40]
            xw = frame * dsp.HANN
            assert one_sided == pytest.approx(80 * np.sum(xw**2), rel=1e-9)

    def test_energy_is_sum_of_40_bins(self):
        s = dsp.power_spectrum(np.random.default_rng(3).standard_normal(80))
        assert s.energy == pytest.approx(s.bins.sum())

    def test_wrong_length(self):
        with pytest.raises(ValueError):
            dsp.power_spectrum(np.zeros(81))


class TestAnalyzeUtterance:
    def test_silence(self):
        u = dsp.analyze_utterance(dsp.AudioClip(np.zeros(16000)))
        assert len(u) == 50
        assert u.max_bin_power == 0 and np.all(u.bins == 0)

    def test_tone_max_bin(self):
        t = np.arange(16000) / 16000
        u = dsp.analyze_utterance(dsp.AudioClip(0.5 * np.sin(2 * np.pi * 2000 * t)))
        assert np.unravel_index(np.argmax(u.bins), u.bins.shape)[1] == 10
        frames = dsp.frame_stream(0.5 * np.sin(2 * np.pi * 2000 * t))
        assert u.max_bin_power == pytest.approx(max(oracle_power(f)[:40].max() for f in frames), rel=1e-9)

    def test_concatenation_max(self):
        rng = np.random.default_rng(4)
        a, b = rng.standard_normal(3200), 3 * rng.standard_normal(3200)
        ua, ub = dsp.analyze_utterance(a), dsp.analyze_utterance(b)
        uab = dsp.analyze_utterance(np.concatenate([a, b]))
        assert uab.max_bin_power == max(ua.max_bin_power, ub.max_bin_power)

    def test_slices_view(self):
        u = dsp.analyze_utterance(np.random.default_rng(5).standard_normal(1000))
        s = u.slices
        assert [x.t_index for x in s] == list(range(len(u)))
        assert s[1].energy == pytest.approx(s[1].bins.sum())

    def test_deterministic(self):
        x = np.random.default_rng(6).standard_normal(5000)
        assert np.array_equal(dsp.analyze_utterance(x).bins, dsp.analyze_utterance(x.copy()).bins)

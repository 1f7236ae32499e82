"""WAV ingestion and short-window power spectra.

At 16 kHz a 5 ms window holds 80 samples, so an 80-point DFT gives bins
spaced 200 Hz apart; bins 0..39 are kept.
"""

from __future__ import annotations

import wave
from dataclasses import dataclass
from pathlib import Path

import numpy as np

SAMPLE_RATE = 16_000
WINDOW = 80
HOP = 320
N_BINS = 40

HANN = 0.5 * (1.0 - np.cos(2.0 * np.pi * np.arange(WINDOW) / WINDOW))


class WavError(ValueError):
    """Base class for rejected audio files."""


class NotWavError(WavError):
    pass


class UnsupportedCodecError(WavError):
    pass


class UnsupportedSampleRateError(WavError):
    pass


class MultiChannelError(WavError):
    pass


@dataclass(frozen=True)
class AudioClip:
    samples: np.ndarray
    sample_rate: int = SAMPLE_RATE

    @property
    def duration(self) -> float:
        return len(self.samples) / self.sample_rate


@dataclass(frozen=True)
class SpectrumSlice:
    bins: np.ndarray
    energy: float
    t_index: int = 0


@dataclass(frozen=True)
class UtteranceSpectra:
    """Spectra of one utterance stored column-wise.

    ``bins`` has shape ``(T, 40)`` and ``energy`` shape ``(T,)``.
    """

    bins: np.ndarray
    energy: np.ndarray
    max_bin_power: float

    def __len__(self) -> int:
        return len(self.bins)

    def slice(self, t: int) -> SpectrumSlice:
        return SpectrumSlice(self.bins[t], float(self.energy[t]), t)

    @property
    def slices(self) -> list[SpectrumSlice]:
        return [self.slice(t) for t in range(len(self))]


def load_wav(path) -> AudioClip:
    """Read a 16-bit PCM mono 16 kHz WAV file.

    Raises a distinct :class:`WavError` subclass for each violated
    property.
    """
    path = Path(path)
    try:
        with wave.open(str(path), "rb") as wf:
            n_channels = wf.getnchannels()
            width = wf.getsampwidth()
            rate = wf.getframerate()
            raw = wf.readframes(wf.getnframes())
    except wave.Error as exc:
        msg = str(exc)
        if msg.startswith("unknown format"):
            raise UnsupportedCodecError(f"{path}: non-PCM codec ({msg})") from exc
        raise NotWavError(f"{path}: not a RIFF/WAVE file ({msg})") from exc
    except EOFError as exc:
        raise NotWavError(f"{path}: truncated or empty file") from exc

    if width != 2:
        raise UnsupportedCodecError(f"{path}: sample width {8 * width} bits, expected 16")
    if n_channels != 1:
        raise MultiChannelError(f"{path}: {n_channels} channels, expected mono")
    if rate != SAMPLE_RATE:
        raise UnsupportedSampleRateError(f"{path}: sample rate {rate} Hz, expected {SAMPLE_RATE}")

    pcm = np.frombuffer(raw, dtype="<i2")
    return AudioClip(pcm.astype(np.float64) / 32768.0, rate)


def save_wav(path, samples: np.ndarray, sample_rate: int = SAMPLE_RATE) -> None:
    """Write amplitudes in [-1, 1] as 16-bit PCM mono."""
    pcm = np.clip(np.round(np.asarray(samples) * 32768.0), -32768, 32767).astype("<i2")
    with wave.open(str(path), "wb") as wf:
        wf.setnchannels(1)
        wf.setsampwidth(2)
        wf.setframerate(sample_rate)
        wf.writeframes(pcm.tobytes())


def frame_stream(clip, window: int = WINDOW, hop: int = HOP) -> np.ndarray:
    """Cut a clip into frames of ``window`` samples every ``hop`` samples.

    A trailing partial window is dropped. Returns shape ``(n_frames, window)``;
    ``n_frames`` is 0 when the clip is shorter than one window.
    """
    x = clip.samples if isinstance(clip, AudioClip) else np.asarray(clip, dtype=np.float64)
    if len(x) < window:
        return np.empty((0, window), dtype=np.float64)
    n_frames = (len(x) - window) // hop + 1
    starts = np.arange(n_frames) * hop
    return x[starts[:, None] + np.arange(window)]


def power_spectra(frames: np.ndarray) -> np.ndarray:
    """Batch form of :func:`power_spectrum`: ``(T, 80) -> (T, 40)``."""
    frames = np.asarray(frames, dtype=np.float64)
    if frames.shape[-1] != WINDOW:
        raise ValueError(f"frames must have {WINDOW} samples, got {frames.shape[-1]}")
    spec = np.fft.rfft(frames * HANN, n=WINDOW, axis=-1)[..., :N_BINS]
    return spec.real**2 + spec.imag**2


def power_spectrum(frame, t_index: int = 0) -> SpectrumSlice:
    frame = np.asarray(frame, dtype=np.float64)
    if frame.shape != (WINDOW,):
        raise ValueError(f"frame must have exactly {WINDOW} samples, got shape {frame.shape}")
    bins = power_spectra(frame)
    return SpectrumSlice(bins, float(bins.sum()), t_index)


def analyze_utterance(clip) -> UtteranceSpectra:
    bins = power_spectra(frame_stream(clip))
    energy = bins.sum(axis=1)
    max_bin = float(bins.max()) if bins.size else 0.0
    return UtteranceSpectra(bins, energy, max_bin)

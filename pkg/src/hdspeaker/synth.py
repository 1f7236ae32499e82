"""Synthetic speaker corpus: noise shaped by per-speaker formant filters.

Each synthetic speaker owns three resonances (F1, F2, F3). Utterances are
white noise filtered through those resonances, with small per-segment
formant jitter, a syllable-rate amplitude envelope, and per-context gain
and spectral tilt standing in for recording conditions.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dsp import SAMPLE_RATE, save_wav

SEGMENT = 0.1


@dataclass(frozen=True)
class SyntheticSpeaker:
    speaker_id: str
    formants: tuple[float, float, float]
    bandwidths: tuple[float, float, float]


def make_speakers(n: int, seed: int = 0) -> list[SyntheticSpeaker]:
    """Draw ``n`` speakers whose formant triples are well separated."""
    rng = np.random.default_rng(seed)
    speakers: list[SyntheticSpeaker] = []
    chosen: list[np.ndarray] = []
    while len(speakers) < n:
        f = np.array([rng.uniform(300, 1000), rng.uniform(1000, 2600), rng.uniform(2600, 4400)])
        if any(np.abs(f - g).max() < 250 for g in chosen):
            continue
        chosen.append(f)
        bw = tuple(float(b) for b in rng.uniform(80, 200, size=3))
        speakers.append(SyntheticSpeaker(f"spk{len(speakers):03d}", tuple(float(x) for x in f), bw))
    return speakers


def formant_response(freqs: np.ndarray, formants, bandwidths, tilt_db_per_khz: float = 0.0) -> np.ndarray:
    h = np.full_like(freqs, 0.02)
    for k, (fk, bk) in enumerate(zip(formants, bandwidths)):
        h += (0.8**k) / (1.0 + ((freqs - fk) / bk) ** 2)
    return h * 10.0 ** (tilt_db_per_khz * freqs / 1000.0 / 20.0)


def synth_utterance(spk: SyntheticSpeaker, seconds: float, rng: np.random.Generator,
                    gain: float = 0.3, tilt_db_per_khz: float = 0.0, jitter: float = 0.03) -> np.ndarray:
    seg = int(SEGMENT * SAMPLE_RATE)
    n_seg = max(1, int(round(seconds / SEGMENT)))
    freqs = np.fft.rfftfreq(seg, 1.0 / SAMPLE_RATE)
    parts = []
    for _ in range(n_seg):
        f = np.asarray(spk.formants) * (1.0 + jitter * rng.standard_normal(3))
        spec = np.fft.rfft(rng.standard_normal(seg)) * formant_response(freqs, f, spk.bandwidths, tilt_db_per_khz)
        parts.append(np.fft.irfft(spec, n=seg))
    x = np.concatenate(parts)
    t = np.arange(len(x)) / SAMPLE_RATE
    env = 0.6 + 0.4 * np.sin(2 * np.pi * 4.0 * t + rng.uniform(0, 2 * np.pi))
    x = x * env
    return gain * x / (np.abs(x).max() + 1e-12)


def write_corpus(root, n_speakers: int = 10, n_contexts: int = 3, n_utterances: int = 5,
                 seconds: float = 3.0, seed: int = 0, silence_s: tuple[float, float] | None = None,
                 utterances_per_context: list[int] | None = None) -> list[SyntheticSpeaker]:
    """Write ``root/<speaker>/<context>/<utt>.wav`` and return the speakers.

    ``silence_s = (lo, hi)`` pads every utterance of a context with a
    context-specific amount of digital silence drawn from ``[lo, hi]``
    seconds, split between the start and the end.
    """
    root = Path(root)
    rng = np.random.default_rng(seed + 1)
    speakers = make_speakers(n_speakers, seed)
    for spk in speakers:
        for c in range(n_contexts):
            ctx_dir = root / spk.speaker_id / f"ctx{c:02d}"
            ctx_dir.mkdir(parents=True, exist_ok=True)
            gain = rng.uniform(0.05, 0.6)
            tilt = rng.uniform(-3.0, 3.0)
            pad = rng.uniform(*silence_s) if silence_s else 0.0
            count = utterances_per_context[c] if utterances_per_context else n_utterances
            for u in range(count):
                x = synth_utterance(spk, seconds, rng, gain, tilt)
                if pad:
                    head = int(pad * SAMPLE_RATE * rng.uniform(0.3, 0.7))
                    tail = int(pad * SAMPLE_RATE) - head
                    x = np.concatenate([np.zeros(head), x, np.zeros(tail)])
                save_wav(ctx_dir / f"utt{u:03d}.wav", x)
    return speakers

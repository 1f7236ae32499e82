"""Latency and throughput measurements."""

from __future__ import annotations

import tempfile
import time

import numpy as np

from .dataset import index_dataset
from .encoder import Encoder, EncoderConfig
from .glvq import unit
from .model import Model
from .pipeline import classify_samples, train_model
from .synth import make_speakers, synth_utterance, write_corpus


def random_model(n_speakers: int = 1251, cfg: EncoderConfig = EncoderConfig(p_target=1.0), seed: int = 0) -> Model:
    rng = np.random.default_rng(seed)
    profiles = rng.standard_normal((n_speakers, cfg.dim))
    return Model(cfg, [f"id{i:05d}" for i in range(n_speakers)], profiles, unit(profiles),
                 [], np.empty(0, dtype=np.uint64), np.empty((0, cfg.dim)))


def classify_latency(n_speakers: int = 1251, dim: int = 1024, seconds: float = 1.0,
                     repeats: int = 20, seed: int = 0) -> float:
    """Median wall time (s) to encode and rank ``seconds`` of audio.

    Covers spectral analysis, encoding and cosine ranking against
    ``n_speakers`` random prototypes, after one warm-up call.
    """
    cfg = EncoderConfig(dim=dim, p_target=1.0)
    model = random_model(n_speakers, cfg, seed)
    encoder = Encoder(cfg)
    protos = model.prototype_set()
    rng = np.random.default_rng(seed)
    samples = synth_utterance(make_speakers(1, seed)[0], seconds, rng)
    classify_samples(model, samples, encoder, protos)
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        classify_samples(model, samples, encoder, protos)
        times.append(time.perf_counter() - t0)
    return float(np.median(times))


def training_throughput(n_speakers: int = 10, seconds: float = 3.0, seed: int = 0,
                        cfg: EncoderConfig = EncoderConfig()) -> float:
    """Audio seconds trained per wall second on a fresh synthetic corpus."""
    with tempfile.TemporaryDirectory() as root:
        write_corpus(root, n_speakers=n_speakers, seconds=seconds, seed=seed)
        index = index_dataset(root)
        t0 = time.perf_counter()
        _, timings = train_model(index, cfg)
        wall = time.perf_counter() - t0
    return timings.audio_seconds / wall

"""End-to-end workflow: train profiles, refine with GLVQ, evaluate, classify."""

from __future__ import annotations

import logging
import time
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import glvq
from .dataset import DatasetIndex
from .dsp import WavError, analyze_utterance, load_wav
from .encoder import (Encoder, EncoderConfig, SilentUtteranceError, UtteranceEncoding,
                      accumulate_profiles, compute_p_target)
from .evaluation import EvalReport, Ranking, UnclassifiableError, classify, classify_many, topk_accuracy
from .model import Model

logger = logging.getLogger(__name__)


@dataclass
class Timings:
    """Wall-clock seconds per phase plus the amount of audio processed."""

    phases: dict[str, float] = field(default_factory=lambda: defaultdict(float))
    audio_seconds: float = 0.0

    @property
    def total(self) -> float:
        return sum(self.phases.values())

    def realtime_factor(self) -> float:
        return self.audio_seconds / self.total if self.total else float("inf")

    def summary(self) -> str:
        parts = [f"{k} {v:.2f}s" for k, v in self.phases.items()]
        return (f"{', '.join(parts)}; {self.audio_seconds:.1f}s of audio, "
                f"{self.realtime_factor():.0f}x real-time")


@dataclass
class _Encoded:
    speaker_id: str
    context_id: str
    path: str
    vec: np.ndarray | None
    ngram_count: int
    max_bin_power: float
    seconds: float
    t_load: float
    t_encode: float
    error: str | None = None


_worker_encoder: Encoder | None = None


def _encoder_for(cfg: EncoderConfig) -> Encoder:
    global _worker_encoder
    if _worker_encoder is None or _worker_encoder.cfg != cfg:
        _worker_encoder = Encoder(cfg)
    return _worker_encoder


def _encode_one(cfg: EncoderConfig, sid: str, cid: str, path) -> _Encoded:
    enc = _encoder_for(cfg)
    t0 = time.perf_counter()
    try:
        clip = load_wav(path)
    except WavError as exc:
        return _Encoded(sid, cid, str(path), None, 0, 0.0, 0.0, 0.0, 0.0, str(exc))
    spectra = analyze_utterance(clip)
    t1 = time.perf_counter()
    try:
        c_t = enc.scale_for(spectra)
    except SilentUtteranceError as exc:
        return _Encoded(sid, cid, str(path), None, 0, 0.0, clip.duration, t1 - t0, 0.0, str(exc))
    vec, count = enc.utterance_vector(spectra, c_t)
    t2 = time.perf_counter()
    return _Encoded(sid, cid, str(path), vec, count, spectra.max_bin_power, clip.duration, t1 - t0, t2 - t1)


def _encode_all(cfg: EncoderConfig, items, workers: int = 1, strict: bool = False) -> list[_Encoded]:
    items = list(items)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_encode_one, *zip(*[(cfg, s, c, p) for s, c, p in items]),
                                    chunksize=max(1, len(items) // (8 * workers))))
    else:
        results = [_encode_one(cfg, s, c, p) for s, c, p in items]
    for r in results:
        if r.error is not None:
            if strict:
                raise WavError(f"{r.path}: {r.error}")
            logger.warning("skipping %s: %s", r.path, r.error)
    return results


def train_model(index: DatasetIndex, cfg: EncoderConfig, workers: int = 1,
                strict: bool = False) -> tuple[Model, Timings]:
    """One pass over the training contexts of ``index``.

    In normalized mode without a configured ``p_target``, utterances are
    encoded with ``c_t = 1 / P_max`` and the profiles are rescaled by
    ``p_target ** (N * alpha)`` once ``p_target`` is known; the result is
    the same as encoding with ``c_t = p_target / P_max`` directly.
    """
    timings = Timings()
    results = _encode_all(cfg, index.train_items(), workers, strict)
    for r in results:
        timings.phases["load+analyze"] += r.t_load
        timings.phases["encode"] += r.t_encode
        timings.audio_seconds += r.seconds

    t0 = time.perf_counter()
    encodings = [UtteranceEncoding(r.speaker_id, r.context_id, r.path, r.vec, r.ngram_count, r.max_bin_power)
                 for r in results if r.vec is not None]
    contexts, speakers = accumulate_profiles(encodings)

    if cfg.weighting == "normalized" and cfg.p_target is None:
        p_target = compute_p_target([speakers[s].max_bin_power for s in index.speakers if s in speakers])
        gain = p_target ** (cfg.ngram * cfg.alpha)
        for prof in contexts.values():
            prof.vec *= gain
        for sp in speakers.values():
            sp.vec *= gain
        cfg = replace(cfg, p_target=p_target)

    ids = [s for s in index.speakers if s in speakers and np.any(speakers[s].vec)]
    for s in index.speakers:
        if s not in ids:
            logger.warning("speaker %s has no usable training audio; dropped", s)
    # prototypes derive from the stored float32 profiles, as refine() does
    profiles = np.vstack([speakers[s].vec for s in ids]).astype(np.float32)
    keys = [k for k in sorted(contexts) if k[0] in ids]
    model = Model(
        config=cfg,
        speakers=ids,
        profiles=profiles,
        prototypes=glvq.unit(profiles.astype(np.float64)),
        context_keys=keys,
        context_counts=np.array([contexts[k].ngram_count for k in keys], dtype=np.uint64),
        context_vecs=np.vstack([contexts[k].vec for k in keys]),
    )
    timings.phases["accumulate"] += time.perf_counter() - t0
    return model, timings


def encode_test_set(model: Model, index: DatasetIndex, per_utterance: bool = False, workers: int = 1,
                    strict: bool = False) -> tuple[np.ndarray, list[str], Timings]:
    """Encode each speaker's reserved context (or each of its utterances).

    Test ``c_t`` uses the utterance's own ``P_max`` with the model's stored
    ``p_target``. Items whose vector is all zeros are dropped with a warning.
    """
    timings = Timings()
    items = [(s, c, p) for s, c, p in index.test_items() if s in set(model.speakers)]
    results = _encode_all(model.config, items, workers, strict)
    groups: dict[tuple[str, str], np.ndarray] = {}
    vecs, labels = [], []
    for r in results:
        timings.phases["load+analyze"] += r.t_load
        timings.phases["encode"] += r.t_encode
        timings.audio_seconds += r.seconds
        if r.vec is None:
            continue
        if per_utterance:
            vecs.append(r.vec)
            labels.append(r.speaker_id)
        else:
            key = (r.speaker_id, r.context_id)
            groups[key] = groups[key] + r.vec if key in groups else r.vec.copy()
    if not per_utterance:
        for (sid, _), v in sorted(groups.items()):
            vecs.append(v)
            labels.append(sid)
    keep = [i for i, v in enumerate(vecs) if np.any(v)]
    if len(keep) < len(vecs):
        logger.warning("%d test item(s) have zero vectors and were skipped", len(vecs) - len(keep))
    if not keep:
        raise UnclassifiableError("no classifiable test items")
    return np.vstack([vecs[i] for i in keep]), [labels[i] for i in keep], timings


def evaluate(model: Model, index: DatasetIndex, per_utterance: bool = False, workers: int = 1,
             train_seconds: float | None = None, strict: bool = False) -> tuple[EvalReport, list[Ranking], list[str]]:
    t0 = time.perf_counter()
    X, labels, timings = encode_test_set(model, index, per_utterance, workers, strict)
    rankings = classify_many(X, model.prototype_set())
    wall = time.perf_counter() - t0
    latency = 1000.0 * wall / timings.audio_seconds if timings.audio_seconds else None
    report = EvalReport.from_rankings(rankings, labels, len(model.speakers), active_params=model.dim,
                                      train_time=train_seconds, latency_ms_per_s=latency)
    return report, rankings, labels


def refine(model: Model, cfg: glvq.GlvqConfig, test: tuple[np.ndarray, list[str]] | None = None
           ) -> tuple[Model, list[glvq.EpochStats]]:
    """GLVQ on the model's training-context vectors, starting from its profiles."""
    if not model.context_keys:
        raise ValueError("model holds no context profiles to refine with")
    speaker_profiles = {s: model.profiles[i].astype(np.float64) for i, s in enumerate(model.speakers)}
    protos = glvq.init_prototypes(speaker_profiles)
    keep = [i for i in range(len(model.context_keys)) if np.any(model.context_vecs[i])]
    X = model.context_vecs[keep].astype(np.float64)
    y = [model.context_keys[i][0] for i in keep]

    hook = None
    if test is not None:
        X_test, y_test = test

        def hook(p: glvq.PrototypeSet):
            rankings = classify_many(X_test, p)
            return tuple(topk_accuracy(rankings, y_test, k) for k in (1, 5, 10))

    protos, stats = glvq.train(protos, X, y, cfg, hook)
    order = [protos.index(s) for s in model.speakers]
    return model.with_prototypes(protos.prototypes[order]), stats


def classify_clip(model: Model, path, encoder: Encoder | None = None) -> tuple[Ranking, float, float]:
    """Rank speakers for one WAV file; returns the ranking, wall seconds and audio seconds."""
    encoder = encoder or Encoder(model.config)
    t0 = time.perf_counter()
    clip = load_wav(path)
    ranking = classify_samples(model, clip.samples, encoder)
    return ranking, time.perf_counter() - t0, clip.duration


def classify_samples(model: Model, samples: np.ndarray, encoder: Encoder, protos=None) -> Ranking:
    spectra = analyze_utterance(samples)
    try:
        c_t = encoder.scale_for(spectra)
    except SilentUtteranceError as exc:
        raise UnclassifiableError(str(exc)) from exc
    vec, _ = encoder.utterance_vector(spectra, c_t)
    return classify(vec, protos if protos is not None else model.prototype_set())


"""Formant encoding of spectra into hypervectors and speaker profiles.

A spectrum slice becomes a 39-bit local binary pattern (rise/fall between
neighbouring bins); each bit selects one of two seed vectors per position,
and the thresholded sum of the 39 selected seeds is the slice hypervector.
Consecutive slice vectors are bound into permuted N-grams, weighted by
slice energy, and summed into context and speaker profiles.
"""

from __future__ import annotations

from collections.abc import Iterable, Iterator, Sequence
from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from . import vsa
from .dsp import N_BINS, SpectrumSlice, UtteranceSpectra

WEIGHTING_MODES = ("none", "energy", "normalized")


class SilentUtteranceError(ValueError):
    """An utterance has zero peak power and cannot be normalized; skip it."""


@dataclass(frozen=True)
class EncoderConfig:
    dim: int = 1024
    ngram: int = 3
    alpha: float = 0.3
    weighting: str = "normalized"
    p_target: float | None = None
    seed_memory: int = 42
    seed_perm: int = 43

    def __post_init__(self):
        if self.dim < 2:
            raise ValueError(f"dim must be >= 2, got {self.dim}")
        if not 1 <= self.ngram <= 5:
            raise ValueError(f"ngram order must be in 1..5, got {self.ngram}")
        if not (np.isfinite(self.alpha) and self.alpha >= 0):
            raise ValueError(f"alpha must be finite and >= 0, got {self.alpha}")
        if self.weighting not in WEIGHTING_MODES:
            raise ValueError(f"weighting must be one of {WEIGHTING_MODES}, got {self.weighting!r}")
        if self.p_target is not None and not self.p_target > 0:
            raise ValueError(f"p_target must be > 0, got {self.p_target}")


@dataclass(frozen=True)
class WeightedNgram:
    hv: np.ndarray
    weight: float


@dataclass(frozen=True)
class WeightedNgrams:
    """All N-grams of one utterance: ``hvs`` is ``(M, D)``, ``weights`` ``(M,)``."""

    hvs: np.ndarray
    weights: np.ndarray

    def __len__(self) -> int:
        return len(self.weights)

    def __iter__(self) -> Iterator[WeightedNgram]:
        for hv, w in zip(self.hvs, self.weights):
            yield WeightedNgram(hv, float(w))

    def total(self) -> np.ndarray:
        """Weighted sum of the N-grams as a float64 vector."""
        if not len(self):
            return np.zeros(self.hvs.shape[1], dtype=np.float64)
        return self.weights @ self.hvs.astype(np.float64)


def _bins(x) -> np.ndarray:
    return x.bins if isinstance(x, (SpectrumSlice, UtteranceSpectra)) else np.asarray(x)


def lbp(spectrum) -> np.ndarray:
    """Local binary pattern of a 40-bin spectrum (or a stack of them).

    Bit ``i - 1`` is set iff bin ``i`` holds strictly more power than bin
    ``i - 1``.
    """
    bins = _bins(spectrum)
    if bins.shape[-1] != N_BINS:
        raise ValueError(f"expected {N_BINS} bins, got {bins.shape[-1]}")
    return bins[..., 1:] > bins[..., :-1]


def encode_slice(code, mem: vsa.SeedMemory) -> np.ndarray:
    code = np.asarray(code, dtype=bool)
    if code.shape != (vsa.N_DIFFS,):
        raise ValueError(f"LBP code must have {vsa.N_DIFFS} bits")
    chosen = mem.table[np.arange(vsa.N_DIFFS), code.astype(np.intp)]
    return vsa.threshold(chosen.sum(axis=0, dtype=np.int32))


class _SliceEncoder:
    """Batched equivalent of :func:`encode_slice` for one seed memory.

    Sum over selected seeds = sum of all "fall" seeds + code @ (rise - fall).
    Entries stay small integers, so float32 BLAS is exact here.
    """

    def __init__(self, mem: vsa.SeedMemory):
        table = mem.table.astype(np.float32)
        self.base = table[:, 0].sum(axis=0)
        self.delta = table[:, 1] - table[:, 0]

    def __call__(self, codes: np.ndarray) -> np.ndarray:
        sums = self.base + codes.astype(np.float32) @ self.delta
        return np.where(sums >= 0, 1, -1).astype(vsa.HV_DTYPE)


def encode_ngram(window: Sequence[np.ndarray], perm: vsa.Permutation) -> np.ndarray:
    """Bind the oldest-first window, permuting element ``j`` ``N - 1 - j`` times."""
    n = len(window)
    if n < 1:
        raise ValueError("N-gram window must hold at least one vector")
    out = np.ones(perm.dim, dtype=vsa.HV_DTYPE)
    for j, s in enumerate(window):
        out = vsa.bind(out, vsa.permute(s, perm, n - 1 - j))
    return out


def encode_ngrams(slice_hvs: np.ndarray, perm: vsa.Permutation, n: int) -> np.ndarray:
    """All complete N-grams of a ``(T, D)`` sequence; shape ``(T - n + 1, D)``."""
    m = len(slice_hvs) - n + 1
    if m <= 0:
        return np.empty((0, slice_hvs.shape[1]), dtype=vsa.HV_DTYPE)
    out = slice_hvs[n - 1 :].copy()
    for j in range(n - 1):
        out *= slice_hvs[j : j + m][:, perm.power(n - 1 - j)]
    return out


def slice_weight(energy, cfg: EncoderConfig, c_t: float = 1.0):
    """Per-slice weight: 1, ``E**alpha`` or ``(c_t * E)**alpha`` by mode."""
    energy = np.asarray(energy, dtype=np.float64)
    if np.any(energy < 0):
        raise ValueError("slice energy must be non-negative")
    if cfg.weighting == "none":
        w = np.ones_like(energy)
    elif cfg.weighting == "energy":
        w = energy**cfg.alpha
    else:
        if not c_t > 0:
            raise ValueError(f"normalization factor must be > 0, got {c_t}")
        w = (c_t * energy) ** cfg.alpha
    return float(w) if w.ndim == 0 else w


def ngram_weights(slice_weights: np.ndarray, n: int) -> np.ndarray:
    """Weight of each N-gram: the product of its ``n`` slice weights."""
    slice_weights = np.asarray(slice_weights, dtype=np.float64)
    if len(slice_weights) < n:
        return np.empty(0, dtype=np.float64)
    return sliding_window_view(slice_weights, n).prod(axis=1)


def context_scale(p_target: float, p_max_utterance: float) -> float:
    if not p_max_utterance > 0:
        raise SilentUtteranceError(f"utterance peak bin power is {p_max_utterance}; cannot normalize")
    if not p_target > 0:
        raise ValueError(f"p_target must be > 0, got {p_target}")
    return p_target / p_max_utterance


def compute_p_target(speaker_max_powers: Sequence[float], override: float | None = None,
                     n_first: int = 40) -> float:
    """Mean peak bin power over the first ``n_first`` speakers.

    ``speaker_max_powers`` holds, in registry order, each speaker's maximum
    bin power across their training utterances. An explicit ``override``
    wins.
    """
    if override is not None:
        if not override > 0:
            raise ValueError(f"p_target must be > 0, got {override}")
        return float(override)
    powers = list(speaker_max_powers)[:n_first]
    if not powers:
        raise ValueError("no training data to derive p_target from")
    return float(np.mean(powers))


def encode_utterance(spectra: UtteranceSpectra, cfg: EncoderConfig, mem: vsa.SeedMemory,
                     perm: vsa.Permutation, c_t: float = 1.0) -> WeightedNgrams:
    """Weighted N-grams of one utterance; none span its start or end."""
    hvs = encode_ngrams(_SliceEncoder(mem)(lbp(spectra)), perm, cfg.ngram)
    weights = ngram_weights(slice_weight(spectra.energy, cfg, c_t), cfg.ngram)
    return WeightedNgrams(hvs, weights)


class Encoder:
    """Seed memory, permutation and config bundled for repeated encoding."""

    def __init__(self, cfg: EncoderConfig):
        self.cfg = cfg
        self.mem = vsa.make_seed_memory(cfg.seed_memory, cfg.dim)
        self.perm = vsa.make_permutation(cfg.seed_perm, cfg.dim)
        self._slices = _SliceEncoder(self.mem)
        self._powers = [self.perm.power(cfg.ngram - 1 - j) for j in range(cfg.ngram - 1)]

    def scale_for(self, spectra: UtteranceSpectra, p_target: float | None = None) -> float:
        """``c_t`` for an utterance; 1 outside normalized mode.

        With no ``p_target`` yet known, returns ``1 / P_max``.  Because
        ``c_t`` is constant over an utterance, every N-gram weight is then
        off by exactly ``p_target ** (N * alpha)``, a common factor the
        caller can apply once ``p_target`` is known.
        """
        if self.cfg.weighting != "normalized":
            return 1.0
        p = p_target if p_target is not None else self.cfg.p_target
        return context_scale(1.0 if p is None else p, spectra.max_bin_power)

    def encode(self, spectra: UtteranceSpectra, c_t: float = 1.0) -> WeightedNgrams:
        n = self.cfg.ngram
        s = self._slices(lbp(spectra))
        m = len(s) - n + 1
        if m <= 0:
            hvs = np.empty((0, self.cfg.dim), dtype=vsa.HV_DTYPE)
        else:
            hvs = s[n - 1 :].copy()
            for j, idx in enumerate(self._powers):
                hvs *= s[j : j + m][:, idx]
        weights = ngram_weights(slice_weight(spectra.energy, self.cfg, c_t), n)
        return WeightedNgrams(hvs, weights)

    def utterance_vector(self, spectra: UtteranceSpectra, c_t: float = 1.0) -> tuple[np.ndarray, int]:
        """Weighted N-gram sum of one utterance and its N-gram count."""
        grams = self.encode(spectra, c_t)
        return grams.total(), len(grams)


@dataclass(frozen=True)
class UtteranceEncoding:
    """Encoded contribution of a single utterance to its context profile."""

    speaker_id: str
    context_id: str
    utterance_id: str
    vec: np.ndarray = field(repr=False)
    ngram_count: int
    max_bin_power: float = 0.0


@dataclass
class ContextProfile:
    speaker_id: str
    context_id: str
    vec: np.ndarray = field(repr=False)
    ngram_count: int = 0
    max_bin_power: float = 0.0


@dataclass
class SpeakerProfile:
    speaker_id: str
    vec: np.ndarray = field(repr=False)
    context_ids: tuple[str, ...] = ()
    max_bin_power: float = 0.0


def accumulate_profiles(encodings: Iterable[UtteranceEncoding]
                        ) -> tuple[dict[tuple[str, str], ContextProfile], dict[str, SpeakerProfile]]:
    """Sum utterance contributions into context profiles, then speakers.

    Contributions are summed in sorted (speaker, context, utterance) order
    whatever order they arrive in, so results are bit-stable.
    """
    ordered = sorted(encodings, key=lambda e: (e.speaker_id, e.context_id, e.utterance_id))
    contexts: dict[tuple[str, str], ContextProfile] = {}
    for enc in ordered:
        key = (enc.speaker_id, enc.context_id)
        prof = contexts.get(key)
        if prof is None:
            prof = contexts[key] = ContextProfile(
                enc.speaker_id, enc.context_id, np.zeros(len(enc.vec), dtype=np.float64))
        prof.vec += enc.vec
        prof.ngram_count += enc.ngram_count
        prof.max_bin_power = max(prof.max_bin_power, enc.max_bin_power)

    speakers: dict[str, SpeakerProfile] = {}
    for (sid, cid), prof in contexts.items():
        sp = speakers.get(sid)
        if sp is None:
            sp = speakers[sid] = SpeakerProfile(sid, np.zeros_like(prof.vec))
        sp.vec += prof.vec
        sp.context_ids += (cid,)
        sp.max_bin_power = max(sp.max_bin_power, prof.max_bin_power)
    return contexts, speakers


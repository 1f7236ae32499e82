"""Trained model and its binary file format.

Layout (all little-endian)::

    magic      6 bytes  b"HDSPK1"
    version    u16
    dim        u32
    ngram      u8
    alpha      f64
    weighting  u8       0 none, 1 energy, 2 normalized
    p_target   f64      0 when unset
    seed_mem   u64
    seed_perm  u64
    n_spk      u32, then n_spk x (u16 length + UTF-8 id)
    profiles   n_spk x dim f32
    prototypes n_spk x dim f32
    n_ctx      u32, then n_ctx x (u32 speaker index, u16 length + UTF-8 id,
                                  u64 ngram count, dim f32)

Vectors are kept as float32 in memory too, so a save/load round trip is
bit-exact.
"""

from __future__ import annotations

import io
import os
import struct
import tempfile
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .encoder import WEIGHTING_MODES, EncoderConfig
from .glvq import PrototypeSet

MAGIC = b"HDSPK1"
VERSION = 1
_HEADER = struct.Struct("<IBdBdQQ")
F32 = np.dtype("<f4")


class ModelFormatError(ValueError):
    pass


@dataclass
class Model:
    config: EncoderConfig
    speakers: list[str]
    profiles: np.ndarray
    prototypes: np.ndarray
    context_keys: list[tuple[str, str]]
    context_counts: np.ndarray
    context_vecs: np.ndarray

    def __post_init__(self):
        self.profiles = np.ascontiguousarray(self.profiles, dtype=F32)
        self.prototypes = np.ascontiguousarray(self.prototypes, dtype=F32)
        self.context_vecs = np.ascontiguousarray(self.context_vecs, dtype=F32).reshape(-1, self.config.dim)
        self.context_counts = np.asarray(self.context_counts, dtype=np.uint64)
        if self.profiles.shape != (len(self.speakers), self.config.dim):
            raise ValueError("profile matrix shape does not match speakers x dim")
        if self.prototypes.shape != self.profiles.shape:
            raise ValueError("prototype matrix shape does not match profiles")

    @property
    def dim(self) -> int:
        return self.config.dim

    def prototype_set(self) -> PrototypeSet:
        return PrototypeSet(self.prototypes.astype(np.float64), self.speakers)

    def context_labels(self) -> list[str]:
        return [sid for sid, _ in self.context_keys]

    def with_prototypes(self, prototypes: np.ndarray) -> Model:
        return replace(self, prototypes=prototypes)

    def stored_parameters(self) -> int:
        return self.profiles.size + self.prototypes.size


def _pack_str(buf: io.BytesIO, s: str) -> None:
    b = s.encode("utf-8")
    buf.write(struct.pack("<H", len(b)))
    buf.write(b)


def to_bytes(m: Model) -> bytes:
    cfg = m.config
    buf = io.BytesIO()
    buf.write(MAGIC)
    buf.write(struct.pack("<H", VERSION))
    buf.write(_HEADER.pack(cfg.dim, cfg.ngram, cfg.alpha, WEIGHTING_MODES.index(cfg.weighting),
                           cfg.p_target or 0.0, cfg.seed_memory, cfg.seed_perm))
    buf.write(struct.pack("<I", len(m.speakers)))
    for sid in m.speakers:
        _pack_str(buf, sid)
    buf.write(m.profiles.astype(F32).tobytes())
    buf.write(m.prototypes.astype(F32).tobytes())
    buf.write(struct.pack("<I", len(m.context_keys)))
    spk_index = {sid: i for i, sid in enumerate(m.speakers)}
    for (sid, cid), count, vec in zip(m.context_keys, m.context_counts, m.context_vecs):
        buf.write(struct.pack("<I", spk_index[sid]))
        _pack_str(buf, cid)
        buf.write(struct.pack("<Q", int(count)))
        buf.write(vec.astype(F32).tobytes())
    return buf.getvalue()


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise ModelFormatError("model file is truncated")
        out = self.data[self.pos:self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt: str):
        s = struct.Struct(fmt)
        return s.unpack(self.take(s.size))

    def string(self) -> str:
        (n,) = self.unpack("<H")
        return self.take(n).decode("utf-8")

    def floats(self, count: int) -> np.ndarray:
        return np.frombuffer(self.take(4 * count), dtype=F32).copy()


def from_bytes(data: bytes) -> Model:
    r = _Reader(data)
    if r.take(len(MAGIC)) != MAGIC:
        raise ModelFormatError("not a model file (bad magic)")
    (version,) = r.unpack("<H")
    if version != VERSION:
        raise ModelFormatError(f"unsupported model format version {version}")
    dim, ngram, alpha, mode, p_target, seed_mem, seed_perm = r.unpack(_HEADER.format)
    if mode >= len(WEIGHTING_MODES):
        raise ModelFormatError(f"unknown weighting mode code {mode}")
    cfg = EncoderConfig(dim, ngram, alpha, WEIGHTING_MODES[mode], p_target or None, seed_mem, seed_perm)
    (n_spk,) = r.unpack("<I")
    speakers = [r.string() for _ in range(n_spk)]
    profiles = r.floats(n_spk * dim).reshape(n_spk, dim)
    prototypes = r.floats(n_spk * dim).reshape(n_spk, dim)
    (n_ctx,) = r.unpack("<I")
    keys, counts, vecs = [], [], []
    for _ in range(n_ctx):
        (si,) = r.unpack("<I")
        if si >= n_spk:
            raise ModelFormatError(f"context refers to unknown speaker index {si}")
        keys.append((speakers[si], r.string()))
        counts.append(r.unpack("<Q")[0])
        vecs.append(r.floats(dim))
    if r.pos != len(data):
        raise ModelFormatError("trailing bytes after model data")
    ctx = np.vstack(vecs) if vecs else np.empty((0, dim), dtype=F32)
    return Model(cfg, speakers, profiles, prototypes, keys, np.array(counts, dtype=np.uint64), ctx)


def save(m: Model, path) -> None:
    """Write ``m`` atomically (temporary file + rename)."""
    path = Path(path)
    data = to_bytes(m)
    fd, tmp = tempfile.mkstemp(prefix=path.name + ".", suffix=".tmp", dir=path.parent or ".")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load(path) -> Model:
    return from_bytes(Path(path).read_bytes())

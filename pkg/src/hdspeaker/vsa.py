"""Bipolar hypervector algebra.

Hypervectors are plain ``int8`` numpy arrays holding +1/-1.  Accumulated
(bundled) vectors are ``float64`` arrays wrapped in :class:`AccumVector`
so that the number of bundled items travels with the sum.

All randomness is drawn from PCG64 raw 64-bit output.  The raw stream of a
seeded PCG64 is a published, platform-independent algorithm, so seed
memories and permutations are reproducible from their integer seeds alone.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

N_DIFFS = 39
"""Number of adjacent-bin differences in a 40-bin spectrum."""

HV_DTYPE = np.int8


class DimensionMismatchError(ValueError):
    pass


class ZeroNormError(ValueError):
    """Cosine similarity requested for an all-zero vector."""


def _check_dim(dim: int) -> None:
    if int(dim) != dim or dim < 2:
        raise ValueError(f"hypervector dimension must be an integer >= 2, got {dim!r}")


def _same_dim(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape[-1] != b.shape[-1]:
        raise DimensionMismatchError(f"dimension mismatch: {a.shape[-1]} vs {b.shape[-1]}")


def raw_stream(seed, n: int) -> np.ndarray:
    """Return ``n`` little-endian uint64 words from a PCG64 seeded with ``seed``.

    ``seed`` may be an int or a sequence of ints (hashed by ``SeedSequence``).
    """
    bitgen = np.random.PCG64(np.random.SeedSequence(seed))
    return np.asarray(bitgen.random_raw(n), dtype="<u8")


def random_bipolar(seed, n_vectors: int, dim: int) -> np.ndarray:
    """Draw ``n_vectors`` random bipolar vectors of length ``dim``.

    Each coordinate is one bit of the raw stream (1 -> +1, 0 -> -1), so
    both signs are equally likely and coordinates are independent.
    """
    _check_dim(dim)
    n_bits = n_vectors * dim
    words = raw_stream(seed, -(-n_bits // 64))
    bits = np.unpackbits(words.view(np.uint8), bitorder="little")[:n_bits]
    hv = bits.astype(HV_DTYPE) * 2 - 1
    return hv.reshape(n_vectors, dim)


@dataclass(frozen=True)
class SeedMemory:
    """The 78 seed vectors ``L_i[b]``: one per (difference index, direction).

    ``table[i - 1, b]`` is the seed for difference ``i`` in ``1..39`` with
    ``b = 1`` for rising power and ``b = 0`` otherwise.
    """

    rng_seed: int
    dim: int
    table: np.ndarray = field(repr=False, compare=False)

    def __getitem__(self, key: tuple[int, int]) -> np.ndarray:
        i, b = key
        if not 1 <= i <= N_DIFFS or b not in (0, 1):
            raise IndexError(f"seed index out of range: {key!r}")
        return self.table[i - 1, b]

    def __len__(self) -> int:
        return self.table.shape[0] * self.table.shape[1]

    def __eq__(self, other) -> bool:
        if not isinstance(other, SeedMemory):
            return NotImplemented
        return np.array_equal(self.table, other.table)

    __hash__ = None


def make_seed_memory(rng_seed: int, dim: int = 1024) -> SeedMemory:
    _check_dim(dim)
    table = random_bipolar(rng_seed, 2 * N_DIFFS, dim).reshape(N_DIFFS, 2, dim)
    table.setflags(write=False)
    return SeedMemory(int(rng_seed), int(dim), table)


@dataclass(frozen=True)
class Permutation:
    """A fixed random reindexing of coordinates.

    Applying it once maps ``v`` to ``v[mapping]``.
    """

    rng_seed: int
    mapping: np.ndarray = field(repr=False, compare=False)

    @property
    def dim(self) -> int:
        return len(self.mapping)

    def power(self, k: int) -> np.ndarray:
        """Index array equivalent to applying the permutation ``k`` times."""
        if k < 0:
            raise ValueError("repetition count must be >= 0")
        idx = np.arange(self.dim)
        for _ in range(k):
            idx = idx[self.mapping]
        return idx

    def inverse(self) -> np.ndarray:
        return np.argsort(self.mapping)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Permutation):
            return NotImplemented
        return np.array_equal(self.mapping, other.mapping)

    __hash__ = None


def make_permutation(rng_seed: int, dim: int = 1024) -> Permutation:
    _check_dim(dim)
    # Stable argsort of uniform 64-bit keys is a uniform random shuffle.
    mapping = np.argsort(raw_stream(rng_seed, dim), kind="stable")
    mapping.setflags(write=False)
    return Permutation(int(rng_seed), mapping)


def bind(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Coordinate-wise product of two bipolar vectors (self-inverse)."""
    a = np.asarray(a)
    b = np.asarray(b)
    _same_dim(a, b)
    return (a * b).astype(HV_DTYPE)


def permute(v: np.ndarray, p: Permutation, k: int = 1) -> np.ndarray:
    v = np.asarray(v)
    if v.shape[-1] != p.dim:
        raise DimensionMismatchError(f"dimension mismatch: {v.shape[-1]} vs {p.dim}")
    return v[..., p.power(k)]


@dataclass
class AccumVector:
    """Real-valued sum of bundled vectors and the number of items in it."""

    coords: np.ndarray
    count: int = 0

    @property
    def dim(self) -> int:
        return len(self.coords)

    def __add__(self, other: AccumVector) -> AccumVector:
        return bundle([self, other])


def bundle(vs: Iterable, weights: Sequence[float] | None = None) -> AccumVector:
    """Weighted coordinate-wise sum, accumulated in input order.

    Items may be bipolar vectors or :class:`AccumVector` instances; an
    accumulator contributes its own ``count``.
    """
    vs = list(vs)
    if not vs:
        raise ValueError("bundle of an empty sequence")
    if weights is None:
        weights = [1.0] * len(vs)
    elif len(weights) != len(vs):
        raise ValueError("weights and vectors differ in length")

    first = vs[0].coords if isinstance(vs[0], AccumVector) else np.asarray(vs[0])
    total = np.zeros(first.shape[-1], dtype=np.float64)
    count = 0
    for v, w in zip(vs, weights):
        w = float(w)
        if not np.isfinite(w) or w < 0:
            raise ValueError(f"bundle weights must be finite and non-negative, got {w}")
        if isinstance(v, AccumVector):
            coords, n = v.coords, v.count
        else:
            coords, n = np.asarray(v), 1
        _same_dim(total, coords)
        total += w * coords
        count += n
    return AccumVector(total, count)


def threshold(s) -> np.ndarray:
    """Coordinate-wise sign; a zero coordinate maps to +1."""
    coords = s.coords if isinstance(s, AccumVector) else np.asarray(s)
    return np.where(coords >= 0, 1, -1).astype(HV_DTYPE)


def cosine(a, b) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    _same_dim(a, b)
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0 or nb == 0:
        raise ZeroNormError("cosine of a zero-norm vector is undefined")
    return float(np.clip(a @ b / (na * nb), -1.0, 1.0))

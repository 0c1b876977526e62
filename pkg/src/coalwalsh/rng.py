"""Counter-based random source.

Every draw is a pure function of ``(seed, stream, counter_hi, counter_lo)``
through a chained splitmix64 finalizer, so any draw can be regenerated in
isolation. That is what makes batch sampling and Monte Carlo trials
reproducible under arbitrary chunking and thread counts.

The same mixing function is evaluated three ways: on Python ints
(:func:`hash_int`), on numpy ``uint64`` arrays, and inside numba kernels.
All three agree bit for bit.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MASK64 = (1 << 64) - 1
_G = (0x9E3779B97F4A7C15, 0x3C6EF372FE94F82A, 0xDAA66D2C7DDF743F, 0x78DDE6E5FD29F054)
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB
_Y_OFFSET = 1 << 31
INV_2_53 = 1.0 / (1 << 53)

# numpy / numba spellings of the constants; mixing signed and unsigned
# operands promotes to float64 under numba, so everything stays uint64
G0, G1, G2, G3 = (np.uint64(g) for g in _G)
M1 = np.uint64(_M1)
M2 = np.uint64(_M2)
S11, S27, S30, S31, S32, S63 = (np.uint64(s) for s in (11, 27, 30, 31, 32, 63))
Y_OFFSET = np.uint64(_Y_OFFSET)


def _fmix_int(z: int) -> int:
    z ^= z >> 30
    z = (z * _M1) & MASK64
    z ^= z >> 27
    z = (z * _M2) & MASK64
    return z ^ (z >> 31)


def hash_int(seed: int, stream: int, hi: int, lo: int) -> int:
    """Reference scalar implementation of the 4-word hash."""
    h = _fmix_int((seed + _G[0]) & MASK64)
    h = _fmix_int(h ^ ((stream + _G[1]) & MASK64))
    h = _fmix_int(h ^ ((hi + _G[2]) & MASK64))
    return _fmix_int(h ^ ((lo + _G[3]) & MASK64))


def fmix(z):
    z = z ^ (z >> S30)
    z = z * M1
    z = z ^ (z >> S27)
    z = z * M2
    return z ^ (z >> S31)


def hash4(seed, stream, hi, lo):
    """uint64 hash; works on numpy uint64 arrays and compiles under numba."""
    h = fmix(seed + G0)
    h = fmix(h ^ (stream + G1))
    h = fmix(h ^ (hi + G2))
    return fmix(h ^ (lo + G3))


def hash4_np(seed, stream, hi, lo):
    """:func:`hash4` for numpy operands, with wraparound warnings silenced."""
    with np.errstate(over="ignore"):
        return hash4(seed, stream, hi, lo)


def site_key_int(x: int, y: int) -> int:
    return ((x << 32) | (y + _Y_OFFSET)) & MASK64


def to_u64(value: int) -> int:
    return int(value) & MASK64


@dataclass(frozen=True)
class SeededSource:
    """A ``(seed, stream)`` pair naming an infinite, random-access draw sequence."""

    seed: int
    stream: int = 0

    def __post_init__(self):
        object.__setattr__(self, "seed", to_u64(self.seed))
        object.__setattr__(self, "stream", to_u64(self.stream))

    def bits(self, hi: int, lo: int = 0) -> int:
        return hash_int(self.seed, self.stream, to_u64(hi), to_u64(lo))

    def uniform(self, hi: int, lo: int = 0) -> float:
        """Double in ``[0, 1)`` with 53 random bits."""
        return (self.bits(hi, lo) >> 11) * INV_2_53

    def uniform_bits53(self, hi: int, lo: int = 0) -> int:
        """The integer ``k`` behind ``uniform() == k / 2**53``."""
        return self.bits(hi, lo) >> 11

    def derive(self, tag: int) -> "SeededSource":
        """Independent child stream, e.g. for the flip layer of a perturbation."""
        return SeededSource(self.seed, hash_int(self.stream, tag, 0x5EED, 0))

    @property
    def words(self):
        return np.uint64(self.seed), np.uint64(self.stream)

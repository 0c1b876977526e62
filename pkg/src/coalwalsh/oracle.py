"""Brute-force ground truth for the Fourier-Walsh coefficients.

Sites of the triangular array are numbered row-major (x ascending, then y
ascending): site ``(x, y)`` has index ``x(x+1)/2 + (x+y)/2``. A sign array
is a bitmask over that numbering with bit ``0 -> +1`` and ``1 -> -1``; a
subset ``S`` is a bitmask over the same numbering. With this convention the
unnormalized Walsh-Hadamard transform of the table ``mask -> W(n)`` gives
``2**N * sqrt(n) * xi_hat(S)`` at index ``S``, ``N = n(n+1)/2``.
"""
from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import _kernels
from .kernel import Dyadic, Site, p
from .spectral import SpectralSet, q

ORACLE_LIMIT = 6
_MAGIC = b"CWFT"
_FORMAT_VERSION = 1


def index_set_size(n: int) -> int:
    return n * (n + 1) // 2


def site_order(n: int) -> list[Site]:
    return [Site(x, y) for x in range(n) for y in range(-x, x + 1, 2)]


def memory_estimate(n: int) -> int:
    """Bytes held by the dense transform table (int64 per subset)."""
    return 8 << index_set_size(n)


def mask_to_sites(mask: int, n: int) -> list[Site]:
    order = site_order(n)
    return [order[i] for i in range(len(order)) if mask >> i & 1]


def sites_to_mask(sites) -> int:
    return sum(1 << (s if isinstance(s, Site) else Site(*s)).index() for s in sites)


@dataclass(frozen=True)
class SignArray:
    """One realization of the triangular sign array, bit-packed into an int."""

    n: int
    bits: int = 0

    def __post_init__(self):
        if self.bits < 0 or self.bits >> index_set_size(self.n):
            raise ValueError(f"bit pattern does not fit {index_set_size(self.n)} sites")

    @classmethod
    def from_signs(cls, n: int, signs: dict) -> "SignArray":
        """Build from ``{(x, y): +-1}``; unspecified sites are ``+1``."""
        bits = 0
        for (x, y), s in signs.items():
            if s not in (1, -1):
                raise ValueError("signs must be +1 or -1")
            site = Site(x, y)
            if site.x >= n:
                raise ValueError(f"site {(x, y)} outside the array")
            if s == -1:
                bits |= 1 << site.index()
        return cls(n, bits)

    def __len__(self):
        return index_set_size(self.n)

    def sign(self, x: int, y: int) -> int:
        return -1 if self.bits >> Site(x, y).index() & 1 else 1

    def flipped(self, flip_mask: int) -> "SignArray":
        return SignArray(self.n, self.bits ^ flip_mask)

    def to_array(self) -> np.ndarray:
        """Signs in site order."""
        return np.array([-1 if self.bits >> i & 1 else 1 for i in range(len(self))], dtype=np.int8)


def walk_endpoint(tau: SignArray) -> int:
    """Follow the signs along the walk's own path: ``W(x+1) = W(x) + tau(x, W(x))``."""
    w = 0
    for x in range(tau.n):
        w += tau.sign(x, w)
    return w


@dataclass(frozen=True)
class FullTransform:
    """Dense exact coefficients: ``xi_hat(mask) = raw[mask] / 2**exponent / sqrt(n)``."""

    n: int
    raw: np.ndarray
    exponent: int

    def value(self, mask: int) -> Dyadic:
        return Dyadic(int(self.raw[mask]), self.exponent)

    def __len__(self):
        return self.raw.shape[0]

    def nonzero_masks(self) -> np.ndarray:
        return np.flatnonzero(self.raw)

    def parseval_sum(self):
        """``sum xi_hat**2`` as an exact Fraction (should be 1)."""
        from fractions import Fraction

        total = sum(int(v) * int(v) for v in self.raw[self.raw != 0])
        return Fraction(total, self.n << (2 * self.exponent))

    def to_json(self) -> dict:
        if self.n > 4:
            raise ValueError("JSON export is limited to n <= 4; use dump() for larger tables")
        return {
            "n": self.n,
            "site_order": [[s.x, s.y] for s in site_order(self.n)],
            "bit_convention": "bit i of a mask selects site_order[i]",
            "scale": "xi_hat = d / sqrt(n)",
            "d": [str(self.value(m)) for m in range(len(self))],
        }

    def dump(self, path) -> None:
        """Binary layout (little-endian): ``b"CWFT"``, u32 version, u32 n,
        u32 site count N, u32 exponent, N x (i32 x, i32 y) in site order,
        then ``2**N`` i64 numerators indexed by mask."""
        order = site_order(self.n)
        with open(path, "wb") as fh:
            fh.write(_MAGIC)
            fh.write(struct.pack("<IIII", _FORMAT_VERSION, self.n, len(order), self.exponent))
            fh.write(b"".join(struct.pack("<ii", s.x, s.y) for s in order))
            fh.write(self.raw.astype("<i8").tobytes())

    @classmethod
    def load(cls, path) -> "FullTransform":
        with open(path, "rb") as fh:
            if fh.read(4) != _MAGIC:
                raise ValueError("not a transform dump")
            version, n, count, exponent = struct.unpack("<IIII", fh.read(16))
            if version != _FORMAT_VERSION:
                raise ValueError(f"unsupported dump version {version}")
            fh.read(8 * count)
            raw = np.frombuffer(fh.read(8 << count), dtype="<i8").astype(np.int64)
        return cls(n, raw, exponent)


@lru_cache(maxsize=8)
def _endpoint_table_cached(n: int) -> np.ndarray:
    table = _kernels.endpoint_table(n)
    table.setflags(write=False)
    return table


def brute_force_transform(n: int, allow_large: bool = False, backend=None) -> FullTransform:
    """Evaluate ``W(n)`` on all ``2**N`` sign arrays and transform exactly.

    Refuses ``n > 6`` unless ``allow_large`` is set (``n = 7`` needs 2 GiB).
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if n > ORACLE_LIMIT and not allow_large:
        raise ValueError(
            f"brute-force transform for n={n} needs {memory_estimate(n) / 2**20:.0f} MiB "
            f"and 2^{index_set_size(n)} evaluations; pass allow_large=True to proceed"
        )
    table = _kernels.endpoint_table(n, backend)
    _kernels.fwht(table, backend)
    return FullTransform(n, table, index_set_size(n))


def conditional_oracle(S, k: int, tau_prefix: SignArray) -> Dyadic:
    """``sqrt(n) * E[tau(S) xi | signs at times <= k]`` by averaging over completions.

    ``tau_prefix`` is the horizon-``k+1`` array, i.e. exactly the signs at
    times ``0..k``. ``S`` may be any site set strictly after time ``k``.
    """
    if isinstance(S, SpectralSet):
        n, sites = S.n, list(S.sites)
    else:
        n, sites = S
        sites = [s if isinstance(s, Site) else Site(*s) for s in sites]
    if not 0 <= k < n:
        raise ValueError("k must lie in [0, n)")
    if tau_prefix.n != k + 1:
        raise ValueError("prefix must fix exactly the signs at times 0..k")
    if any(s.x <= k for s in sites):
        raise ValueError("S intersects the conditioned region")
    if any(s.x >= n for s in sites):
        raise ValueError("S leaves the index set")
    if n > 5:
        raise ValueError("conditional oracle is exhaustive; n <= 5 only")
    low = index_set_size(k + 1)
    w = _endpoint_table_cached(n)[tau_prefix.bits :: 1 << low]
    s_high = sites_to_mask(sites) >> low
    completions = np.arange(w.shape[0], dtype=np.int64)
    parity = np.zeros_like(completions)
    for bit in range(index_set_size(n) - low):
        if s_high >> bit & 1:
            parity ^= (completions >> bit) & 1
    total = int(np.sum(w * (1 - 2 * parity)))
    return Dyadic(total, index_set_size(n) - low)


def conditional_closed_form(S: SpectralSet, k: int, w_next: int) -> Dyadic:
    """Closed form of the conditional coefficient given ``W(k+1) = w_next``."""
    first = S.sites[0]
    return p(first.x - (k + 1), first.y - w_next) * q(S)


def save_json(transform: FullTransform, path) -> None:
    with open(path, "w") as fh:
        json.dump(transform.to_json(), fh, indent=1)

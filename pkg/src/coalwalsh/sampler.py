"""Sampling the spectral set and its time projection.

The projection ``R`` is drawn as the zero set of a walk run backward at
double speed from a uniform top element. Positions are then filled
in increasing time order: ``y_1`` from ``p(x_1, y)**2 / p(2 x_1, 0)``, then each
increment over a gap ``dx`` from ``gap_factor(dx, dy)**2 / g(dx)``. Both
laws are evaluated exactly and sampled by inverse CDF against a 53-bit
uniform, scanning support in ascending order.

Draw layout for sample ``i`` of a :class:`SeededSource`: ``bits(i, 0)``
picks the top element, ``bits(i, 1 + b)`` supplies walk steps
``64b .. 64b+63`` (bit ``s % 64``, set = up-step), and
``uniform(i, 2**40 + j)`` drives the ``j``-th position draw.
"""
from __future__ import annotations

from bisect import bisect_right
from fractions import Fraction
from functools import lru_cache
from math import ceil

import numpy as np

from . import _kernels
from .kernel import first_return_prob, p, return_prob
from .rng import SeededSource
from .spectral import SpectralSet, TimeSet, gap_factor

WALK_ENUM_LIMIT = 10
_Y_DRAW_BASE = 1 << 40
_UNIT = 1 << 53

__all__ = [
    "SeededSource",
    "walk_path",
    "sample_R_walk",
    "sample_R_batch",
    "sample_S",
    "sample_S_batch",
    "enumerate_walk_zero_sets",
    "walk_zero_mixture",
    "position_law",
    "increment_law",
]


def walk_path(n: int, src: SeededSource, index: int = 0) -> tuple[int, list[int]]:
    """Top element ``x_m`` and the backward walk sampled at even times.

    Returns ``(x_m, V)`` with ``V[j] = V(2j)``, so the walk value plotted
    at time ``x`` is ``V[x_m - x]``.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    xm = src.bits(index, 0) % n
    v, out, h = 0, [0], 0
    for s in range(2 * xm):
        if s % 64 == 0:
            h = src.bits(index, 1 + s // 64)
        v += 1 if h >> (s % 64) & 1 else -1
        if s % 2 == 1:
            out.append(v)
    return xm, out


def sample_R_walk(n: int, src: SeededSource, index: int = 0) -> TimeSet:
    """Time projection of one spectral-set draw, via the doubled-speed walk."""
    xm, v = walk_path(n, src, index)
    return TimeSet(tuple(x for x in range(xm + 1) if v[xm - x] == 0), n)


def sample_R_batch(n: int, count: int, src: SeededSource, first: int = 0, chunk: int = 4096, backend=None):
    """Draws ``first .. first+count-1``; identical to calling :func:`sample_R_walk` per index."""
    out = []
    for start in range(first, first + count, chunk):
        size = min(chunk, first + count - start)
        _, member = _kernels.sample_r(n, start, size, src.seed, src.stream, backend)
        out.extend(TimeSet(tuple(np.flatnonzero(row).tolist()), n) for row in member)
    return out


# --------------------------------------------------------------------------
# exact position laws


def _thresholds(probs: list[Fraction]) -> list[int]:
    total = Fraction(0)
    thr = []
    for pr in probs:
        total += pr
        thr.append(ceil(total * _UNIT))
    if total != 1:
        raise AssertionError(f"law does not normalize: {total}")
    return thr


@lru_cache(maxsize=None)
def position_law(x1: int) -> tuple[tuple[int, ...], tuple[Fraction, ...]]:
    """Support and probabilities of the first position given first time ``x1``."""
    support = tuple(range(-x1, x1 + 1, 2))
    norm = return_prob(x1).to_fraction()
    return support, tuple((p(x1, y) * p(x1, y)).to_fraction() / norm for y in support)


@lru_cache(maxsize=None)
def increment_law(dx: int) -> tuple[tuple[int, ...], tuple[Fraction, ...]]:
    """Support and probabilities of the position increment over a time gap ``dx >= 1``."""
    support = tuple(range(-dx, dx + 1, 2))
    norm = first_return_prob(dx).to_fraction()
    return support, tuple((gap_factor(dx, d) ** 2).to_fraction() / norm for d in support)


@lru_cache(maxsize=None)
def _position_sampler(x1):
    support, probs = position_law(x1)
    return support, _thresholds(list(probs))


@lru_cache(maxsize=None)
def _increment_sampler(dx):
    support, probs = increment_law(dx)
    return support, _thresholds(list(probs))


def _positions(R: TimeSet, src: SeededSource, index: int) -> list[tuple[int, int]]:
    xs = R.xs
    support, thr = _position_sampler(xs[0])
    y = support[bisect_right(thr, src.uniform_bits53(index, _Y_DRAW_BASE))]
    sites = [(xs[0], y)]
    for j, (a, b) in enumerate(zip(xs, xs[1:]), start=1):
        support, thr = _increment_sampler(b - a)
        y += support[bisect_right(thr, src.uniform_bits53(index, _Y_DRAW_BASE + j))]
        sites.append((b, y))
    return sites


def sample_S(n: int, src: SeededSource, index: int = 0) -> SpectralSet:
    """One draw from the spectral measure."""
    R = sample_R_walk(n, src, index)
    return SpectralSet(_positions(R, src, index), n)


def sample_S_batch(n: int, count: int, src: SeededSource, first: int = 0, chunk: int = 4096, backend=None):
    """Draws ``first .. first+count-1`` as ``(R, S)`` pairs; same values as :func:`sample_S`."""
    Rs = sample_R_batch(n, count, src, first, chunk, backend)
    return [(R, SpectralSet._trusted(_positions(R, src, first + i), n)) for i, R in enumerate(Rs)]


# --------------------------------------------------------------------------
# exact law of the walk-zero construction


def enumerate_walk_zero_sets(xm: int, backend=None) -> list[tuple[tuple[int, ...], Fraction]]:
    """Exact law of the zero set below ``x_m`` of the doubled-speed walk.

    Enumerates all ``4**x_m`` step sequences; entries are
    ``(sorted zero times < x_m, probability)`` with nonzero probability,
    ordered by bitmask.
    """
    if xm < 0:
        raise ValueError("x_m must be nonnegative")
    if xm > WALK_ENUM_LIMIT:
        raise ValueError(f"x_m={xm} exceeds the enumeration bound {WALK_ENUM_LIMIT}")
    counts = _kernels.walk_zero_counts(xm, backend)
    total = 1 << (2 * xm)
    return [
        (tuple(x for x in range(xm) if mask >> x & 1), Fraction(int(c), total))
        for mask, c in enumerate(counts)
        if c
    ]


def walk_zero_mixture(n: int, backend=None) -> dict[tuple[int, ...], Fraction]:
    """Law of ``R`` implied by a uniform top element plus the walk-zero construction."""
    out: dict[tuple[int, ...], Fraction] = {}
    for xm in range(n):
        for below, prob in enumerate_walk_zero_sets(xm, backend):
            out[below + (xm,)] = prob / n
    return out
